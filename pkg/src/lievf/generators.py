"""Sample target curves.

``composed_se3`` mimics the shape of the manipulator experiment: a closed
loop in a 7-dimensional joint space pushed through a product of
exponentials.  The arm geometry below is made up (there is no real robot
model here); it only has to give a proper, non-self-intersecting SE(3) curve.
"""

from __future__ import annotations

import math

import numpy as np

from .curve import DiscretizedCurve, build_curve, twist_curve
from .groups import rotation, s_map, se3, se3_from, translation_element, translation_group

# Revolute axes (unit) and a point on each axis, base frame; alternating
# z / y joints like a 7-DoF serial arm.
_ARM_AXES = np.array([
    [0, 0, 1], [0, 1, 0], [0, 0, 1], [0, 1, 0], [0, 0, 1], [0, 1, 0], [0, 0, 1],
], dtype=float)
_ARM_POINTS = np.array([
    [0, 0, 0.16], [0, 0, 0.28], [0, 0, 0.49], [0, 0, 0.70], [0, 0, 0.91], [0, 0, 1.12], [0, 0, 1.22],
], dtype=float)
_ARM_HOME = se3_from(t=[0.0, 0.0, 1.30])


def arm_screws() -> np.ndarray:
    """Fixed-frame twists ``[v; w]`` with ``v = q x w`` for each joint."""
    return np.array([np.concatenate((np.cross(q, w), w)) for w, q in zip(_ARM_AXES, _ARM_POINTS)])


def _revolute_exp(axis, point, angle) -> np.ndarray:
    # exp of the zero-pitch screw about the line (point, axis).
    R = rotation(axis, angle)
    return se3_from(R, (np.eye(3) - R) @ point)


def arm_forward_kinematics(q) -> np.ndarray:
    H = np.eye(4)
    for w, p, angle in zip(_ARM_AXES, _ARM_POINTS, q):
        H = H @ _revolute_exp(w, p, angle)
    return H @ _ARM_HOME


def joint_loop(n_samples: int) -> np.ndarray:
    """The closed joint-space loop, one row per sample index."""
    u = np.array([1, 0, 1, 0, 1, 0, 1], dtype=float)
    v = np.array([0, 1, 0, 1, 0, 1, 0], dtype=float)
    i = np.arange(n_samples)[:, None]
    phase = 2.0 * math.pi * i / n_samples
    return (math.pi / 36.0 * (u + v)
            + math.pi * np.cos(phase) * u / np.linalg.norm(u)
            + 5.0 * math.pi / 18.0 * (np.sin(phase) + 1.0) * v / (2.0 * np.linalg.norm(v)))


def composed_se3(n_samples: int = 5000, check_simple: bool = True) -> DiscretizedCurve:
    samples = np.stack([arm_forward_kinematics(q) for q in joint_loop(n_samples)])
    return build_curve(se3(), samples, closed=True, check_simple=check_simple)


def circle_t2(n_samples: int = 360, radius: float = 1.0, center=(0.0, 0.0)) -> DiscretizedCurve:
    phase = 2.0 * math.pi * np.arange(n_samples) / n_samples
    cx, cy = center
    samples = [translation_element([cx + radius * math.cos(a), cy + radius * math.sin(a)]) for a in phase]
    return build_curve(translation_group(2), samples, closed=True)


DEFAULT_SCREW = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 2.0 * math.pi])
DEFAULT_SCREW_START = se3_from(t=[0.3, 0.0, 0.5])


def screw_se3(zeta=DEFAULT_SCREW, H0=DEFAULT_SCREW_START, n_samples: int = 5000,
              closed=None, check_simple: bool = True) -> DiscretizedCurve:
    """``exp(S[zeta] s) H0`` for s in [0, 1].

    Closed when ``exp(S[zeta]) = I`` (a whole number of turns with no pitch)
    unless ``closed`` says otherwise.
    """
    g = se3()
    zeta = np.asarray(zeta, dtype=float)
    if closed is None:
        closed = bool(np.linalg.norm(g.exp(s_map(g, zeta)) - np.eye(4)) < 1e-9)
    samples = twist_curve(g, zeta, np.asarray(H0, dtype=float), n_samples, closed)
    return build_curve(g, samples, closed, check_simple=check_simple)
