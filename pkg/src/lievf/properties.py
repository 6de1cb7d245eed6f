"""Seeded property suite behind ``lievf check``.

Each probe returns the worst residual over its trials; the suite passes when
every residual is within its tolerance.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .curve import DiscretizedCurve, build_curve, ec_distance, twist_curve
from .distance import (BOUNDARY_MARGIN, check_chainability, check_left_invariance, check_local_linearity,
                       ee_distance, ee_distance_generic, log_exp_log_identity)
from .field import FieldConfig, evaluate_field
from .groups import GroupDescriptor, group_exp_step, random_element, rotation, se3_from, translation_element

TOLERANCES = {
    "left_invariance": 1e-9,
    "chainability": 1e-8,
    "local_linearity": 1e-6,
    "log_exp_log": 1e-9,
    "oracle_equivalence": 1e-9,
    "orthogonality": 1e-4,
    "lyapunov": 0.05,
}

# The forward quotient and sample-level s* are too coarse for these tolerances.
PROBE_FIELD = FieldConfig(scheme="central", eps=1e-4, refine=True)
LYAPUNOV_STEP = 1e-5


@dataclass(frozen=True)
class PropertyResult:
    name: str
    max_residual: float
    tolerance: float
    trials: int

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def _pair(group: GroupDescriptor, rng: np.random.Generator):
    """Random ``(V, W)`` whose relative rotation stays off the cut locus."""
    V = random_element(group, rng)
    return V, V @ random_element(group, rng, max_angle=math.pi - BOUNDARY_MARGIN)


@functools.lru_cache(maxsize=8)
def probe_curve(group: GroupDescriptor, n_samples: int = 1000) -> DiscretizedCurve:
    """A closed one-turn loop on ``group`` for the field probes."""
    name = group.name
    if name == "SE3":
        zeta, H0 = (0.0, 0.0, 0.0, 0.0, 0.0, 2.0 * math.pi), se3_from(rotation([1, 0, 0], 0.3), [0.3, 0.0, 0.5])
        samples = twist_curve(group, np.array(zeta), H0, n_samples, closed=True)
    elif name == "SO3":
        samples = twist_curve(group, np.array([0.0, 0.0, 2.0 * math.pi]), rotation([1, 0, 0], 0.3),
                              n_samples, closed=True)
    else:
        m = group.algebra_dim
        if m < 2:
            raise ValueError("field probes need m >= 2")
        phase = 2.0 * math.pi * np.arange(n_samples) / n_samples
        pts = np.zeros((n_samples, m))
        pts[:, 0], pts[:, 1] = np.cos(phase), np.sin(phase)
        samples = np.stack([translation_element(p) for p in pts])
    return build_curve(group, samples, closed=True, check_simple=False)


def _off_curve_state(curve: DiscretizedCurve, rng: np.random.Generator) -> np.ndarray:
    g = curve.group
    P = random_element(g, rng, scale=0.2, max_angle=0.5)
    return P @ curve.samples[rng.integers(curve.n_samples)]


def _field_states(curve: DiscretizedCurve, rng: np.random.Generator, count: int, cfg: FieldConfig,
                  min_distance: float = 1e-2):
    out = []
    while len(out) < count:
        H = _off_curve_state(curve, rng)
        q = ec_distance(curve, H, **cfg.search_kwargs())
        if q.near_tie or q.distance <= min_distance:
            continue
        out.append((H, q))
    return out


def orthogonality_residuals(curve: DiscretizedCurve, rng: np.random.Generator, count: int,
                            cfg: FieldConfig = PROBE_FIELD) -> np.ndarray:
    """``|xi_N . xi_T| / (|xi_N| |xi_T|)`` at random off-curve states."""
    r = np.empty(count)
    for i, (H, q) in enumerate(_field_states(curve, rng, count, cfg)):
        ev = evaluate_field(curve, H, cfg, q)
        r[i] = abs(ev.xi_N @ ev.xi_T) / (np.linalg.norm(ev.xi_N) * np.linalg.norm(ev.xi_T))
    return r


def lyapunov_residuals(curve: DiscretizedCurve, rng: np.random.Generator, count: int,
                       cfg: FieldConfig = PROBE_FIELD, delta: float = LYAPUNOV_STEP) -> np.ndarray:
    """Relative gap between a one-step difference of D and ``-k_N |xi_N|^2``."""
    r = np.empty(count)
    for i, (H, q) in enumerate(_field_states(curve, rng, count, cfg)):
        ev = evaluate_field(curve, H, cfg, q)
        H1 = group_exp_step(curve.group, H, ev.xi, delta)
        rate = (ec_distance(curve, H1, **cfg.search_kwargs()).distance - ev.D) / delta
        expected = -ev.kN * float(ev.xi_N @ ev.xi_N)
        r[i] = abs(rate - expected) / abs(expected)
    return r


def _oracle_gap(group: GroupDescriptor, V, W) -> float:
    fast = ee_distance(group, V, W)
    if group.name.startswith("T"):
        ref = float(np.linalg.norm(V[:-1, -1] - W[:-1, -1]))
        slow = ee_distance_generic(group, V, W)
        return max(abs(fast - ref), abs(slow - ref)) / (1.0 + ref)
    slow = ee_distance_generic(group, V, W)
    return abs(fast - slow) / (1.0 + slow)


def run_property_suite(group: GroupDescriptor, trials: int, seed: int = 0,
                       field_trials: int | None = None) -> list[PropertyResult]:
    """Every probe on ``group``; field probes use ``field_trials`` states (default ``min(trials, 200)``)."""
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(TOLERANCES, 0.0)
    for _ in range(trials):
        V, W = _pair(group, rng)
        A = random_element(group, rng)
        worst["left_invariance"] = max(worst["left_invariance"], check_left_invariance(group, A, V, W))
        sigma = rng.uniform(0.0, 1.0)
        worst["chainability"] = max(worst["chainability"], check_chainability(group, V, W, sigma))
        ratio = check_local_linearity(group, V, W, [1e-2, 1e-3, 1e-4])
        worst["local_linearity"] = max(worst["local_linearity"], abs(ratio - ee_distance(group, V, W)))
        Z = random_element(group, rng, max_angle=math.pi - BOUNDARY_MARGIN)
        worst["log_exp_log"] = max(worst["log_exp_log"], log_exp_log_identity(group, Z, rng.uniform(0.0, 1.0)))
        worst["oracle_equivalence"] = max(worst["oracle_equivalence"], _oracle_gap(group, V, W))
    n_field = min(trials, 200) if field_trials is None else field_trials
    if n_field > 0:
        curve = probe_curve(group)
        worst["orthogonality"] = float(orthogonality_residuals(curve, rng, n_field).max())
        worst["lyapunov"] = float(lyapunov_residuals(curve, rng, n_field).max())
    counts = {k: (n_field if k in ("orthogonality", "lyapunov") else trials) for k in TOLERANCES}
    return [PropertyResult(k, float(worst[k]), TOLERANCES[k], counts[k]) for k in TOLERANCES]
