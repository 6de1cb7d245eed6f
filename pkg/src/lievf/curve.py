"""Discretised target curves and the brute-force element-to-curve search."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .distance import BOUNDARY_MARGIN, batch_distance_into, ee_distance, group_log, rotation_angle
from .groups import (GroupDescriptor, GroupError, MEMBERSHIP_TOL, group_from_name,
                     membership_residual, s_inv, s_map)

PROPER_TOL = 1e-9
TIE_TOLERANCE = 1e-6
TIE_SEPARATION = 1.0 / 20.0
# Central differences of a general curve leave an O(ds^2) part outside the
# algebra; this bounds it relative to the tangent size.
TANGENT_SPAN_TOL = 1e-2


class CurveError(ValueError):
    pass


class ImproperParametrization(CurveError):
    pass


@dataclass(frozen=True, eq=False)
class DiscretizedCurve:
    group: GroupDescriptor
    samples: np.ndarray  # (N, n, n)
    closed: bool
    tangents: np.ndarray  # (N, m)
    ds: float

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def parameter(self, index: int) -> float:
        return index * self.ds

    def reversed(self) -> "DiscretizedCurve":
        """The same curve traversed in the opposite sense."""
        return build_curve(self.group, self.samples[::-1], self.closed, check_simple=False)


@dataclass(frozen=True)
class CurveQueryResult:
    s_star_index: int
    s_star: float
    distance: float
    near_tie: bool
    tie_indices: tuple
    point: np.ndarray = field(repr=False)
    tangent: np.ndarray = field(repr=False)
    boundary_proxy: bool = False  # SE(3)/SO(3): angle to the nearest point within 1e-3 of pi


def _twists_from_differences(group: GroupDescriptor, dH: np.ndarray, H: np.ndarray) -> np.ndarray:
    A = dH @ np.linalg.inv(H)
    m = group.algebra_dim
    flat = A.reshape(A.shape[0], -1)
    zeta = flat @ group._pinv.T
    resid = np.linalg.norm(flat - zeta @ group.basis.reshape(m, -1), axis=1)
    bad = resid > TANGENT_SPAN_TOL * (1.0 + np.linalg.norm(flat, axis=1))
    if np.any(bad):
        raise CurveError(f"off-group sample near index {int(np.argmax(bad))}: tangent not in algebra span")
    return zeta


def curve_tangents(group: GroupDescriptor, samples: np.ndarray, closed: bool, ds: float) -> np.ndarray:
    N = samples.shape[0]
    tangents = np.empty((N, group.algebra_dim))
    if closed:
        nxt = np.roll(samples, -1, axis=0)
        prv = np.roll(samples, 1, axis=0)
        tangents[:] = _twists_from_differences(group, (nxt - prv) / (2.0 * ds), samples)
    else:
        tangents[1:-1] = _twists_from_differences(
            group, (samples[2:] - samples[:-2]) / (2.0 * ds), samples[1:-1])
        # One-sided at the ends, taken on the group so the twist stays in the algebra.
        for i, j in ((0, 1), (N - 1, N - 2)):
            L = group_log(group, samples[j] @ np.linalg.inv(samples[i]))
            sign = 1.0 if j > i else -1.0
            tangents[i] = sign * s_inv(group, L, tol=TANGENT_SPAN_TOL) / ds
    return tangents


def _check_simple(group: GroupDescriptor, samples: np.ndarray, closed: bool) -> None:
    N = samples.shape[0]
    out = np.empty(N)
    for i in range(N - 2):
        lo = i + 2
        hi = N - 1 if (closed and i == 0) else N
        if hi <= lo:
            continue
        batch_distance_into(group, samples[i:i + 1], samples, out, lo, hi)
        j = lo + int(np.argmin(out[lo:hi]))
        if out[j] <= 0.0:
            raise CurveError(f"self-intersecting curve: samples {i} and {j} coincide")


def build_curve(group: GroupDescriptor, samples: Sequence, closed: bool,
                check_simple: bool = True) -> DiscretizedCurve:
    """Validate samples and attach finite-difference tangent twists.

    Interior tangents are central differences ``(H[i+1] - H[i-1]) / (2 ds) H[i]^-1``
    mapped to coordinates; closed curves wrap around.  ``ds`` is ``1/N`` for
    closed curves and ``1/(N-1)`` for open ones.
    """
    samples = np.ascontiguousarray(np.asarray(samples, dtype=float))
    n = group.matrix_order
    if samples.ndim != 3 or samples.shape[1:] != (n, n):
        raise CurveError(f"samples must have shape (N, {n}, {n}), got {samples.shape}")
    N = samples.shape[0]
    if N < 3:
        raise CurveError("a curve needs at least 3 samples")
    for i, H in enumerate(samples):
        if not membership_residual(group, H) <= MEMBERSHIP_TOL:
            raise CurveError(f"off-group sample at index {i}")
    ds = 1.0 / N if closed else 1.0 / (N - 1)
    tangents = curve_tangents(group, samples, closed, ds)
    speed = np.linalg.norm(tangents, axis=1)
    if np.any(speed <= PROPER_TOL):
        raise ImproperParametrization(
            f"improper parametrization: zero tangent at index {int(np.argmin(speed))}")
    if check_simple:
        _check_simple(group, samples, closed)
    samples.setflags(write=False)
    tangents.setflags(write=False)
    return DiscretizedCurve(group, samples, bool(closed), tangents, ds)


# --- search -----------------------------------------------------------------

_POOLS: dict[int, ThreadPoolExecutor] = {}


def _pool(workers: int) -> ThreadPoolExecutor:
    pool = _POOLS.get(workers)
    if pool is None:
        pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="curve-search")
        _POOLS[workers] = pool
    return pool


def default_workers() -> int:
    env = os.environ.get("FIELD_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def curve_distances(curve: DiscretizedCurve, H, parallel: bool = False,
                    workers: Optional[int] = None) -> np.ndarray:
    """D(H, H_d(s_i)) for every sample; parallel mode splits the index range."""
    H = np.ascontiguousarray(np.asarray(H, dtype=float)[None])
    N = curve.n_samples
    out = np.empty(N)
    if not parallel:
        batch_distance_into(curve.group, H, curve.samples, out, 0, N)
        return out
    workers = workers or default_workers()
    bounds = np.linspace(0, N, workers + 1).astype(int)
    futures = [
        _pool(workers).submit(batch_distance_into, curve.group, H, curve.samples, out, int(lo), int(hi))
        for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo
    ]
    for f in futures:
        f.result()
    return out


def _argmin_chunked(d: np.ndarray, bounds: np.ndarray) -> int:
    best, best_i = math.inf, -1
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi <= lo:
            continue
        i = int(lo) + int(np.argmin(d[lo:hi]))
        if d[i] < best:  # strict: earlier chunk wins ties
            best, best_i = d[i], i
    return best_i


def _local_minima(d: np.ndarray, closed: bool) -> np.ndarray:
    if closed:
        left, right = np.roll(d, 1), np.roll(d, -1)
    else:
        left = np.concatenate(([np.inf], d[:-1]))
        right = np.concatenate((d[1:], [np.inf]))
    return (d <= left) & (d <= right)


def _index_separation(idx: np.ndarray, k: int, N: int, closed: bool) -> np.ndarray:
    sep = np.abs(idx - k)
    return np.minimum(sep, N - sep) if closed else sep


_REFIT_SPACINGS = (0.2, 0.02)


def _refine(curve: DiscretizedCurve, H, d: np.ndarray, k: int):
    """Sub-sample minimiser: parabola through D^2 at k-1, k, k+1.

    The point at fractional offset ``delta`` is reached from sample ``k`` by
    integrating a linearly varying tangent twist, which keeps it on the curve
    to second order (a geodesic chord does not).
    """
    N = curve.n_samples
    if not curve.closed and (k == 0 or k == N - 1):
        return None
    km, kp = (k - 1) % N, (k + 1) % N
    # D^2 is smooth at the minimiser where D itself has a cone.
    fm, f0, fp = d[km] ** 2, d[k] ** 2, d[kp] ** 2
    denom = fm - 2.0 * f0 + fp
    if denom <= 0.0:
        return None
    delta = float(np.clip(0.5 * (fm - fp) / denom, -0.5, 0.5))
    g = curve.group
    xi = curve.tangents
    slope = 0.5 * (xi[kp] - xi[km])

    def at(t):
        step = curve.ds * (t * xi[k] + 0.5 * t * t * slope)
        return g.exp(s_map(g, step)) @ curve.samples[k]

    # The sample parabola is only O(ds^2) accurate; refit on the interpolant.
    for h in _REFIT_SPACINGS:
        ts = (delta - h, delta, delta + h)
        fm, f0, fp = (ee_distance(g, H, at(t)) ** 2 for t in ts)
        denom = fm - 2.0 * f0 + fp
        if denom <= 0.0:
            break
        delta = float(np.clip(delta + 0.5 * h * (fm - fp) / denom, -0.5, 0.5))
    point = at(delta)
    tangent = xi[k] + delta * slope
    s = (k + delta) * curve.ds
    if curve.closed:
        s %= 1.0
    return s, point, tangent, ee_distance(g, H, point)


def ec_distance(curve: DiscretizedCurve, H, parallel: bool = False, *,
                workers: Optional[int] = None,
                tie_tolerance: float = TIE_TOLERANCE,
                tie_separation: float = TIE_SEPARATION,
                refine: bool = False) -> CurveQueryResult:
    """Exhaustive nearest-sample search.

    Ties go to the lowest index.  ``near_tie`` is raised when another local
    minimum lies within ``tie_tolerance`` of the best value and more than
    ``tie_separation * N`` samples away from it; ``tie_indices`` then lists
    every sample within tolerance.  ``refine`` fits a parabola through the
    three samples around the minimiser (see :func:`_refine`).
    """
    N = curve.n_samples
    d = curve_distances(curve, H, parallel=parallel, workers=workers)
    if parallel:
        w = workers or default_workers()
        k = _argmin_chunked(d, np.linspace(0, N, w + 1).astype(int))
    else:
        k = int(np.argmin(d))
    dmin = float(d[k])

    within = d <= dmin + tie_tolerance
    far_minima = np.flatnonzero(within & _local_minima(d, curve.closed))
    far_minima = far_minima[_index_separation(far_minima, k, N, curve.closed) > tie_separation * N]
    near_tie = far_minima.size > 0
    ties = tuple(int(i) for i in np.flatnonzero(within)) if near_tie else ()

    s_star, point, tangent, distance = k * curve.ds, curve.samples[k], curve.tangents[k], dmin
    if refine and not near_tie:
        refined = _refine(curve, H, d, k)
        if refined is not None and refined[3] <= dmin:
            s_star, point, tangent, distance = refined

    boundary = False
    if curve.group.name in ("SE3", "SO3"):
        Hq = np.asarray(H, dtype=float)
        boundary = rotation_angle(Hq[:3, :3].T @ point[:3, :3]) >= math.pi - BOUNDARY_MARGIN

    return CurveQueryResult(k, float(s_star), float(distance), bool(near_tie), ties,
                            point, np.asarray(tangent), bool(boundary))


def min_distance_to_P_estimate(curve: DiscretizedCurve, probes: Iterable, **search) -> float:
    """Smallest EC-distance among probes whose nearest point is ambiguous; inf if none."""
    best = math.inf
    for H in probes:
        q = ec_distance(curve, H, **search)
        if q.near_tie:
            best = min(best, q.distance)
    return best


# --- curve files --------------------------------------------------------------

def curve_to_dict(curve: DiscretizedCurve) -> dict:
    name = curve.group.name
    out = {"group": "T" if name.startswith("T") else name}
    if name.startswith("T"):
        out["m"] = curve.group.algebra_dim
    out["closed"] = curve.closed
    out["samples"] = [H.tolist() for H in curve.samples]
    return out


def curve_from_dict(data: dict, check_simple: bool = True) -> DiscretizedCurve:
    unknown = set(data) - {"group", "m", "closed", "samples"}
    if unknown:
        raise CurveError(f"unknown curve keys: {sorted(unknown)}")
    try:
        group = group_from_name(data["group"], data.get("m"))
        n = group.matrix_order
        samples = np.asarray(data["samples"], dtype=float).reshape(-1, n, n)
        closed = bool(data["closed"])
    except (KeyError, TypeError, ValueError, GroupError) as exc:
        raise CurveError(f"malformed curve file: {exc}") from exc
    return build_curve(group, samples, closed, check_simple=check_simple)


def save_curve(curve: DiscretizedCurve, path) -> None:
    Path(path).write_text(json.dumps(curve_to_dict(curve)))


def load_curve(path, check_simple: bool = True) -> DiscretizedCurve:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CurveError(f"malformed curve file: {exc}") from exc
    return curve_from_dict(data, check_simple=check_simple)


def twist_curve(group: GroupDescriptor, zeta, H0, n_samples: int, closed: bool):
    """Samples of ``exp(S[zeta] s) H0`` on the parameter grid of a curve with N samples."""
    N = n_samples
    ds = 1.0 / N if closed else 1.0 / (N - 1)
    A = s_map(group, zeta)
    return np.stack([group.exp(A * (i * ds)) @ H0 for i in range(N)])
