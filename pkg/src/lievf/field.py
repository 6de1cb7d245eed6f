"""The guiding vector field: normal (convergence) + tangent (traversal) terms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .curve import CurveQueryResult, DiscretizedCurve, TIE_SEPARATION, TIE_TOLERANCE, ec_distance
from .distance import _stack, batch_distance_into, group_log
from .groups import GroupError, invert, perturbed_elements, s_inv


class FieldError(ValueError):
    pass


class OnCurveError(FieldError):
    """The normal component is not defined on the curve itself."""


class AmbiguousMinimizer(FieldError):
    """Nearest point is not unique; use :func:`escape_policy`."""


@dataclass(frozen=True)
class GainSchedule:
    """``k_N(D) = a tanh(b sqrt D)`` and ``k_T(D) = c (1 - tanh(d sqrt D))``."""

    kn_scale: float = 0.1
    kn_rate: float = 0.75
    kt_scale: float = 0.03
    kt_rate: float = 0.75

    def __post_init__(self):
        if self.kn_scale <= 0 or self.kn_rate <= 0 or self.kt_scale <= 0 or self.kt_rate < 0:
            raise ValueError("gain parameters must be positive")

    def k_normal(self, D: float) -> float:
        return self.kn_scale * math.tanh(self.kn_rate * math.sqrt(max(D, 0.0)))

    def k_tangent(self, D: float) -> float:
        # 1 - tanh(x) = 2 / (1 + e^{2x}) keeps k_T > 0 for large D
        x = self.kt_rate * math.sqrt(max(D, 0.0))
        return self.kt_scale * 2.0 / (1.0 + math.exp(min(2.0 * x, 700.0)))


@dataclass(frozen=True)
class FieldConfig:
    gains: GainSchedule = field(default_factory=GainSchedule)
    on_curve_tolerance: float = 1e-4
    eps: float = 1e-3
    scheme: str = "forward"  # "central" only for oracle checks
    refine: bool = False
    tie_tolerance: float = TIE_TOLERANCE
    tie_separation: float = TIE_SEPARATION
    escape_magnitude: float = 1e-3
    parallel: bool = False
    workers: Optional[int] = None

    def search_kwargs(self) -> dict:
        return dict(parallel=self.parallel, workers=self.workers, tie_tolerance=self.tie_tolerance,
                    tie_separation=self.tie_separation, refine=self.refine)


@dataclass(frozen=True)
class FieldEvaluation:
    xi: np.ndarray
    xi_N: np.ndarray
    xi_T: np.ndarray
    kN: float
    kT: float
    D: float
    s_star: float
    s_star_index: int
    near_tie: bool
    escaped: bool = False  # xi is the escape twist, not kN xi_N + kT xi_T


def distance_gradient_v(curve: DiscretizedCurve, H, W, eps: float = 1e-3,
                        scheme: str = "forward") -> np.ndarray:
    """``L_V[D](H, W)`` by differences along left perturbations of ``H``.

    Same quotient as :func:`lievf.groups.l_operator`, with all perturbed
    distances evaluated in one batched call.
    """
    g = curve.group
    m = g.algebra_dim
    H = np.asarray(H, dtype=float)
    central = scheme == "central"
    if scheme not in ("forward", "central"):
        raise GroupError(f"unknown difference scheme {scheme!r}")
    Vs = np.empty((2 * m + 1 if central else m + 1, g.matrix_order, g.matrix_order))
    Vs[0] = H
    Vs[1:] = perturbed_elements(g, H, eps, central=central)
    d = np.empty(Vs.shape[0])
    batch_distance_into(g, Vs, _stack(W), d, 0, Vs.shape[0])
    if central:
        out = (d[1:m + 1] - d[m + 1:]) / (2.0 * eps)
    else:
        out = (d[1:] - d[0]) / eps
    if not np.all(np.isfinite(out)):
        raise GroupError("objective non-finite")
    return out


def normal_component(curve: DiscretizedCurve, H, query: CurveQueryResult,
                     config: FieldConfig = FieldConfig()) -> np.ndarray:
    """Negative transpose of ``L_V[D](H, H_d(s*))``; deliberately not normalised."""
    if query.near_tie:
        raise AmbiguousMinimizer("ambiguous minimizer")
    if query.distance <= config.on_curve_tolerance:
        raise OnCurveError("on curve")
    return -distance_gradient_v(curve, H, query.point, config.eps, config.scheme)


def tangent_component(curve: DiscretizedCurve, query: CurveQueryResult) -> np.ndarray:
    if query.near_tie:
        raise AmbiguousMinimizer("ambiguous minimizer")
    return np.array(query.tangent, dtype=float)


def evaluate_field(curve: DiscretizedCurve, H, config: FieldConfig = FieldConfig(),
                   query: Optional[CurveQueryResult] = None) -> FieldEvaluation:
    """``Psi(H) = k_N(D) xi_N + k_T(D) xi_T``.

    Within ``on_curve_tolerance`` of the curve the normal term is dropped
    (its gain vanishes there anyway).
    """
    if query is None:
        query = ec_distance(curve, H, **config.search_kwargs())
    if query.near_tie:
        raise AmbiguousMinimizer("ambiguous minimizer")
    D = query.distance
    kN = config.gains.k_normal(D)
    kT = config.gains.k_tangent(D)
    xi_T = tangent_component(curve, query)
    if D <= config.on_curve_tolerance:
        xi_N = np.zeros(curve.group.algebra_dim)
        xi = kT * xi_T
    else:
        xi_N = normal_component(curve, H, query, config)
        xi = kN * xi_N + kT * xi_T
    return FieldEvaluation(xi, xi_N, xi_T, kN, kT, D, query.s_star, query.s_star_index, False)


def escape_policy(curve: DiscretizedCurve, H, query: CurveQueryResult, magnitude: float = 1e-3) -> np.ndarray:
    """Small twist along the path from ``H`` toward the lowest-index tied minimiser.

    The path ``sigma -> H exp(sigma log(H^-1 W))`` has twist ``H log(H^-1 W) H^-1``
    at ``sigma = 0``.
    """
    g = curve.group
    if magnitude == 0.0:
        return np.zeros(g.algebra_dim)
    target = min(query.tie_indices) if query.tie_indices else query.s_star_index
    H = np.asarray(H, dtype=float)
    W = curve.samples[target]
    L = group_log(g, invert(H) @ W)
    return magnitude * s_inv(g, H @ L @ invert(H))
