"""Element-to-element distance ``||log(V^-1 W)||_F`` and its path generator.

Two routes compute the same number on SE(3):

* :func:`ee_distance_generic` takes the dense principal logarithm;
* :func:`ee_distance_se3` uses the rotation angle / translation closed form
  and never needs a branch choice.

The batched SE(3) kernel is compiled with numba (``nogil``) so the curve
search can fan it out over threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np

from .groups import GroupDescriptor, GroupError, invert
from .matrix_core import PrincipalBranchError, frobenius_norm

# Below this angle the alpha quotient loses digits to cancellation; use the series.
ALPHA_SERIES_THETA = 0.5
# Rotation angles within this of pi are reported on the branch boundary.
BOUNDARY_MARGIN = 1e-3
SQRT2_PI = math.sqrt(2.0) * math.pi


class BoundaryLogError(GroupError):
    """The distance needs a logarithm that has no principal value for this group."""


@dataclass(frozen=True)
class DistanceDiagnostics:
    theta: float
    translation_norm_sq: float  # t' M t
    branch: str  # "principal" | "boundary"


@numba.njit(nogil=True, cache=True)
def _alpha(theta: float, u: float) -> float:
    if theta < ALPHA_SERIES_THETA:
        # Taylor series in theta^2; the closed form cancels badly near 0.
        t2 = theta * theta
        return -(1.0 / 12.0 + t2 * (1.0 / 90.0 + t2 * (13.0 / 15120.0 + t2 * (
            23.0 / 453600.0 + t2 * (101.0 / 39916800.0 + t2 * (
                5263.0 / 46702656000.0 + t2 * (18133.0 / 3923023104000.0 + t2 * (
                    23761.0 / 133382785536000.0))))))))
    w = 1.0 - u
    return (2.0 - 2.0 * u - theta * theta) / (4.0 * w * w)


def rotation_angle(Q) -> float:
    """Angle in [0, pi] of a rotation matrix, via atan2 of its sine and cosine."""
    Q = np.asarray(Q, dtype=float)
    u = 0.5 * (Q[0, 0] + Q[1, 1] + Q[2, 2] - 1.0)
    a0, a1, a2 = Q[2, 1] - Q[1, 2], Q[0, 2] - Q[2, 0], Q[1, 0] - Q[0, 1]
    # (1 / (2 sqrt 2)) ||Q - Q'||_F
    v = 0.5 * math.sqrt(a0 * a0 + a1 * a1 + a2 * a2)
    u = min(1.0, max(-1.0, u))
    v = min(1.0, v)
    return math.atan2(v, u)


def ee_distance_se3(V, W) -> tuple[float, DistanceDiagnostics]:
    """Closed-form SE(3) distance with its angle/translation diagnostics."""
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    Rv = V[:3, :3]
    Q = Rv.T @ W[:3, :3]
    t = Rv.T @ (W[:3, 3] - V[:3, 3])
    u = 0.5 * (Q[0, 0] + Q[1, 1] + Q[2, 2] - 1.0)
    theta = rotation_angle(Q)
    u = min(1.0, max(-1.0, u))
    alpha = _alpha(theta, u)
    tt = float(t @ t)
    tMt = (1.0 - 2.0 * alpha) * tt + 2.0 * alpha * float(t @ Q @ t)
    tMt = max(tMt, 0.0)
    d = math.sqrt(2.0 * theta * theta + tMt)
    branch = "boundary" if theta >= math.pi - BOUNDARY_MARGIN else "principal"
    return d, DistanceDiagnostics(theta, tMt, branch)


@numba.njit(nogil=True, cache=True)
def _se3_kernel(V, W, out, lo, hi):
    # V: (kv, 4, 4), W: (kw, 4, 4) with kv, kw in {1, K}; fills out[lo:hi].
    one_v = V.shape[0] == 1
    one_w = W.shape[0] == 1
    for i in range(lo, hi):
        a = V[0] if one_v else V[i]
        b = W[0] if one_w else W[i]
        # Q = Ra' Rb, t = Ra' (tb - ta)
        q00 = a[0, 0] * b[0, 0] + a[1, 0] * b[1, 0] + a[2, 0] * b[2, 0]
        q01 = a[0, 0] * b[0, 1] + a[1, 0] * b[1, 1] + a[2, 0] * b[2, 1]
        q02 = a[0, 0] * b[0, 2] + a[1, 0] * b[1, 2] + a[2, 0] * b[2, 2]
        q10 = a[0, 1] * b[0, 0] + a[1, 1] * b[1, 0] + a[2, 1] * b[2, 0]
        q11 = a[0, 1] * b[0, 1] + a[1, 1] * b[1, 1] + a[2, 1] * b[2, 1]
        q12 = a[0, 1] * b[0, 2] + a[1, 1] * b[1, 2] + a[2, 1] * b[2, 2]
        q20 = a[0, 2] * b[0, 0] + a[1, 2] * b[1, 0] + a[2, 2] * b[2, 0]
        q21 = a[0, 2] * b[0, 1] + a[1, 2] * b[1, 1] + a[2, 2] * b[2, 1]
        q22 = a[0, 2] * b[0, 2] + a[1, 2] * b[1, 2] + a[2, 2] * b[2, 2]
        d0 = b[0, 3] - a[0, 3]
        d1 = b[1, 3] - a[1, 3]
        d2 = b[2, 3] - a[2, 3]
        t0 = a[0, 0] * d0 + a[1, 0] * d1 + a[2, 0] * d2
        t1 = a[0, 1] * d0 + a[1, 1] * d1 + a[2, 1] * d2
        t2 = a[0, 2] * d0 + a[1, 2] * d1 + a[2, 2] * d2
        u = 0.5 * (q00 + q11 + q22 - 1.0)
        s0 = q21 - q12
        s1 = q02 - q20
        s2 = q10 - q01
        v = 0.5 * math.sqrt(s0 * s0 + s1 * s1 + s2 * s2)
        if u > 1.0:
            u = 1.0
        elif u < -1.0:
            u = -1.0
        if v > 1.0:
            v = 1.0
        theta = math.atan2(v, u)
        alpha = _alpha(theta, u)
        tt = t0 * t0 + t1 * t1 + t2 * t2
        tqt = (t0 * (q00 * t0 + q01 * t1 + q02 * t2)
               + t1 * (q10 * t0 + q11 * t1 + q12 * t2)
               + t2 * (q20 * t0 + q21 * t1 + q22 * t2))
        tmt = (1.0 - 2.0 * alpha) * tt + 2.0 * alpha * tqt
        if tmt < 0.0:
            tmt = 0.0
        out[i] = math.sqrt(2.0 * theta * theta + tmt)


def _stack(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    return np.ascontiguousarray(X)


def _so3_batch(V, W, out, lo, hi):
    Q = np.einsum("kji,kjl->kil", V if V.shape[0] == 1 else V[lo:hi], W if W.shape[0] == 1 else W[lo:hi])
    u = np.clip(0.5 * (np.trace(Q, axis1=1, axis2=2) - 1.0), -1.0, 1.0)
    s = np.stack([Q[:, 2, 1] - Q[:, 1, 2], Q[:, 0, 2] - Q[:, 2, 0], Q[:, 1, 0] - Q[:, 0, 1]], axis=1)
    v = np.minimum(0.5 * np.sqrt(np.sum(s * s, axis=1)), 1.0)
    out[lo:hi] = math.sqrt(2.0) * np.arctan2(v, u)


def _translation_batch(V, W, out, lo, hi):
    tv = V[:, :-1, -1]
    tw = W[:, :-1, -1]
    tv = tv if tv.shape[0] == 1 else tv[lo:hi]
    tw = tw if tw.shape[0] == 1 else tw[lo:hi]
    diff = tw - tv
    out[lo:hi] = np.sqrt(np.sum(diff * diff, axis=1))


def batch_distance_into(group: GroupDescriptor, V: np.ndarray, W: np.ndarray,
                        out: np.ndarray, lo: int, hi: int) -> None:
    """Fill ``out[lo:hi]`` with distances of paired/broadcast stacks ``V``, ``W``.

    ``V`` and ``W`` are contiguous ``(k, n, n)`` stacks with ``k`` either 1
    (broadcast) or the full length.  Releases the GIL for SE(3).
    """
    if group.name == "SE3":
        _se3_kernel(V, W, out, lo, hi)
    elif group.name == "SO3":
        _so3_batch(V, W, out, lo, hi)
    elif group.name.startswith("T"):
        _translation_batch(V, W, out, lo, hi)
    else:
        for i in range(lo, hi):
            a = V[0] if V.shape[0] == 1 else V[i]
            b = W[0] if W.shape[0] == 1 else W[i]
            out[i] = ee_distance_generic(group, a, b)


def batch_distance(group: GroupDescriptor, V, W) -> np.ndarray:
    """Vectorised ``D(V_i, W_i)`` with broadcasting of single elements."""
    V, W = _stack(V), _stack(W)
    k = max(V.shape[0], W.shape[0])
    if V.shape[0] not in (1, k) or W.shape[0] not in (1, k):
        raise GroupError("stacks must have equal length or length 1")
    out = np.empty(k)
    batch_distance_into(group, V, W, out, 0, k)
    return out


def _boundary_log(group: GroupDescriptor, X: np.ndarray) -> np.ndarray:
    """A (non-principal) logarithm of a rotation by exactly pi, SO(3)/SE(3) only."""
    Q = X[:3, :3]
    B = 0.5 * (Q + np.eye(3))  # = a a' for a rotation by pi
    j = int(np.argmax(np.diag(B)))
    axis = B[:, j] / math.sqrt(max(B[j, j], 1e-300))
    axis /= np.linalg.norm(axis)
    theta = rotation_angle(Q)
    K = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
    Omega = theta * K
    if group.name == "SO3":
        return Omega
    th2 = theta * theta
    J = np.eye(3) + (1.0 - math.cos(theta)) / th2 * Omega + (theta - math.sin(theta)) / (th2 * theta) * (Omega @ Omega)
    out = np.zeros((4, 4))
    out[:3, :3] = Omega
    out[:3, 3] = np.linalg.solve(J, X[:3, 3])
    return out


def group_log(group: GroupDescriptor, X) -> np.ndarray:
    """Principal log, or a boundary log for pi-rotations on SO(3)/SE(3)."""
    try:
        return group.log(X)
    except PrincipalBranchError:
        if group.name in ("SE3", "SO3"):
            return _boundary_log(group, np.asarray(X, dtype=float))
        raise BoundaryLogError("boundary logarithm") from None


def ee_distance_generic(group: GroupDescriptor, V, W) -> float:
    """``||log(V^-1 W)||_F`` through the dense logarithm.

    On SO(3)/SE(3) a relative rotation of exactly pi has no principal log;
    the value does not depend on the branch there, so the closed form is used.
    """
    X = invert(V) @ np.asarray(W, dtype=float)
    try:
        return frobenius_norm(group.log(X))
    except PrincipalBranchError:
        if group.name == "SE3":
            return ee_distance_se3(V, W)[0]
        if group.name == "SO3":
            return math.sqrt(2.0) * rotation_angle(X)
        raise BoundaryLogError("boundary logarithm") from None


def ee_distance(group: GroupDescriptor, V, W) -> float:
    """Distance on ``group``, using the fastest exact route available."""
    if group.name == "SE3":
        return ee_distance_se3(V, W)[0]
    if group.name == "SO3":
        V = np.asarray(V, dtype=float)
        return math.sqrt(2.0) * rotation_angle(V.T @ np.asarray(W, dtype=float))
    return ee_distance_generic(group, V, W)


def path_generate(group: GroupDescriptor, sigma: float, V, W) -> np.ndarray:
    """``V exp(sigma log(V^-1 W))``: runs from V (sigma=0) to W (sigma=1)."""
    V = np.asarray(V, dtype=float)
    L = group_log(group, invert(V) @ np.asarray(W, dtype=float))
    return V @ group.exp(sigma * L)


# --- property probes --------------------------------------------------------

def check_left_invariance(group: GroupDescriptor, A, V, W) -> float:
    A = np.asarray(A, dtype=float)
    return abs(ee_distance(group, A @ V, A @ W) - ee_distance(group, V, W))


def check_chainability(group: GroupDescriptor, V, W, sigma: float) -> float:
    P = path_generate(group, sigma, V, W)
    return abs(ee_distance(group, V, P) + ee_distance(group, P, W) - ee_distance(group, V, W))


def check_local_linearity(group: GroupDescriptor, V, W, sigmas: Sequence[float]) -> float:
    """Ratio ``D(V, Phi_sigma) / sigma`` at the smallest sigma given."""
    sigma = float(min(sigmas))
    if sigma <= 0:
        raise ValueError("sigmas must be positive")
    return ee_distance(group, V, path_generate(group, sigma, V, W)) / sigma


def log_exp_log_identity(group: GroupDescriptor, Z, r: float) -> float:
    L = group_log(group, Z)
    return frobenius_norm(group_log(group, group.exp(r * L)) - r * L)


def distance_function(group: GroupDescriptor, W: Optional[np.ndarray] = None):
    """``H -> D(H, W)``, convenient for :func:`lievf.groups.l_operator`."""
    return lambda H: ee_distance(group, H, W)
