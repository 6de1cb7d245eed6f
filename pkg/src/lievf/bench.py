"""Timing harness for the field-evaluation hot path."""

from __future__ import annotations

import hashlib
import json
import math
import os
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .curve import DiscretizedCurve, curve_distances, ec_distance
from .distance import ee_distance_generic, ee_distance_se3
from .field import FieldConfig, evaluate_field
from .generators import composed_se3
from .groups import random_element, rotation, se3, se3_from

WARMUP = 30
REFERENCE_MS_PER_ITERATION = (8.9, 1.7)  # reference only, hardware dependent


@dataclass
class BenchReport:
    N: int
    trials: int
    per_iteration_mean: float  # ms
    per_iteration_stddev: float
    per_iteration_median: float
    fraction_in_search: float
    workers: list[int]
    search_ms: dict[int, float]  # median search time per worker count
    speedup_vs_serial: dict[int, float]
    bit_identical: bool
    cpu_count: int = field(default_factory=lambda: os.cpu_count() or 1)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def table(self) -> str:
        lines = [
            f"field evaluation, N={self.N}, {self.trials} trials, {self.cpu_count} cpu(s)",
            f"  per iteration   {self.per_iteration_mean:.3f} +/- {self.per_iteration_stddev:.3f} ms"
            f" (median {self.per_iteration_median:.3f})",
            f"  in s* search    {100.0 * self.fraction_in_search:.1f} %",
            f"  {'workers':>8} {'search ms':>10} {'speedup':>8}",
        ]
        for w in self.workers:
            lines.append(f"  {w:>8} {self.search_ms[w]:>10.3f} {self.speedup_vs_serial[w]:>8.2f}")
        lines.append(f"  parallel results bit-identical to serial: {self.bit_identical}")
        return "\n".join(lines)


def bench_states(curve: DiscretizedCurve, count: int, seed: int = 0) -> list[np.ndarray]:
    """Alternating on-curve samples and perturbed copies."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        H = curve.samples[rng.integers(curve.n_samples)]
        if i % 2:
            H = se3_from(rotation(rng.normal(size=3), rng.uniform(0.0, 0.5)), 0.1 * rng.normal(size=3)) @ H
        out.append(H)
    return out


def _median_time(fn, repeats: int) -> float:
    ts = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return statistics.median(ts)


def bench_field_eval(N: int = 5000, trials: int = 200, workers: Sequence[int] = (1, 2, 4, 8),
                     seed: int = 0, curve: Optional[DiscretizedCurve] = None,
                     config: FieldConfig = FieldConfig()) -> BenchReport:
    """Time ``evaluate_field`` and split off the part spent in the s* search."""
    if N < 100:
        raise ValueError("N must be at least 100")
    if curve is None:
        curve = composed_se3(N, check_simple=False)
    states = bench_states(curve, max(trials, 1), seed)
    for H in states[:WARMUP] * (1 + WARMUP // max(len(states), 1)):
        evaluate_field(curve, H, config)

    total, search = [], []
    for H in states[:trials]:
        t0 = time.perf_counter()
        q = ec_distance(curve, H, **config.search_kwargs())
        t1 = time.perf_counter()
        if not q.near_tie:
            evaluate_field(curve, H, config, q)
        t2 = time.perf_counter()
        total.append(t2 - t0)
        search.append(t1 - t0)

    identical = True
    search_ms, speedup = {}, {}
    probe = states[: min(len(states), 20)]
    serial = [ec_distance(curve, H) for H in probe]
    serial_d = [curve_distances(curve, H) for H in probe]
    for w in workers:
        for H, ref, ref_d in zip(probe, serial, serial_d):
            q = ec_distance(curve, H, parallel=True, workers=w)
            d = curve_distances(curve, H, parallel=True, workers=w)
            same = (q.s_star_index == ref.s_star_index and q.distance == ref.distance
                    and q.near_tie == ref.near_tie and np.array_equal(d, ref_d))
            identical = identical and same
        for H in probe[:5]:
            ec_distance(curve, H, parallel=True, workers=w)
        t = _median_time(lambda: [ec_distance(curve, H, parallel=True, workers=w) for H in probe],
                         max(3, trials // 20)) / len(probe)
        search_ms[w] = 1e3 * t
    base = search_ms[1] if 1 in search_ms else 1e3 * _median_time(
        lambda: [ec_distance(curve, H) for H in probe], max(3, trials // 20)) / len(probe)
    for w in workers:
        speedup[w] = base / search_ms[w]

    ms = [1e3 * t for t in total]
    return BenchReport(
        N=curve.n_samples, trials=len(total),
        per_iteration_mean=statistics.fmean(ms) if ms else math.nan,
        per_iteration_stddev=statistics.stdev(ms) if len(ms) > 1 else 0.0,
        per_iteration_median=statistics.median(ms) if ms else math.nan,
        fraction_in_search=sum(search) / sum(total) if total else math.nan,
        workers=list(workers), search_ms=search_ms, speedup_vs_serial=speedup, bit_identical=identical,
    )


@dataclass
class KernelReport:
    trials: int
    se3_ops_per_s: float
    generic_ops_per_s: float
    ratio: float
    max_abs_gap: float
    checksum_timed: str
    checksum_untimed: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def table(self) -> str:
        return (f"distance kernels, {self.trials} pairs\n"
                f"  closed form  {self.se3_ops_per_s:12.0f} ops/s\n"
                f"  log based    {self.generic_ops_per_s:12.0f} ops/s\n"
                f"  ratio        {self.ratio:12.1f}\n"
                f"  max |gap|    {self.max_abs_gap:12.2e}")


def _checksum(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype=np.float64).tobytes()).hexdigest()[:16]


def bench_distance_kernels(trials: int = 2000, seed: int = 0) -> KernelReport:
    """Per-pair throughput of the closed-form SE(3) distance against the log-based one."""
    g = se3()
    if trials <= 0:
        return KernelReport(0, 0.0, 0.0, math.nan, 0.0, "", "")
    rng = np.random.default_rng(seed)
    V = np.stack([random_element(g, rng) for _ in range(trials)])
    W = np.stack([v @ random_element(g, rng, max_angle=math.pi - 1e-3) for v in V])
    for i in range(min(trials, WARMUP)):
        ee_distance_se3(V[i], W[i])
        ee_distance_generic(g, V[i], W[i])

    fast = np.empty(trials)
    t0 = time.perf_counter()
    for i in range(trials):
        fast[i] = ee_distance_se3(V[i], W[i])[0]
    t_fast = time.perf_counter() - t0
    slow = np.empty(trials)
    t0 = time.perf_counter()
    for i in range(trials):
        slow[i] = ee_distance_generic(g, V[i], W[i])
    t_slow = time.perf_counter() - t0

    untimed = np.array([ee_distance_se3(v, w)[0] for v, w in zip(V, W)])
    return KernelReport(trials, trials / t_fast, trials / t_slow, t_slow / t_fast,
                        float(np.max(np.abs(fast - slow))), _checksum(fast), _checksum(untimed))
