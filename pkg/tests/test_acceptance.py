"""Acceptance criteria 1 to 9.

Every criterion is asserted on the package defaults.  Where the default forward
quotient limits accuracy, a companion test runs the central variant so the
report separates the math from the difference recipe.
"""

import math
import time

import numpy as np
import pytest

from lievf.bench import bench_field_eval
from lievf.distance import ee_distance, ee_distance_generic, ee_distance_se3, path_generate
from lievf.field import FieldConfig
from lievf.generators import circle_t2, composed_se3, screw_se3
from lievf.groups import (l_operator, random_element, rotation, s_map, se3, se3_from, so3,
                          translation_element, translation_group, xi_operator)
from lievf.properties import TOLERANCES, lyapunov_residuals, orthogonality_residuals, run_property_suite
from lievf.simulator import SimulationConfig, run

RESULTS = []
CENTRAL = FieldConfig(scheme="central", refine=True)


def report(label, passed, detail):
    line = f"{label}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def composed():
    return composed_se3(2000, check_simple=False)


def test_criterion_1_kernel_oracle():
    g, rng = se3(), np.random.default_rng(1)
    t0, worst = time.perf_counter(), 0.0
    for _ in range(10_000):
        V = random_element(g, rng)
        W = V @ random_element(g, rng, max_angle=math.pi - 1e-3)
        fast = ee_distance_se3(V, W)[0]
        worst = max(worst, abs(fast - ee_distance_generic(g, V, W)) / (1.0 + fast))
    dt = time.perf_counter() - t0
    report("criterion 1", worst <= 1e-9 and dt < 10.0, f"max gap/(1+D) {worst:.2e}, {dt:.1f} s")


def test_criterion_2_property_suite():
    t0, worst, ok = time.perf_counter(), {}, True
    for g in (se3(), so3(), translation_group(3)):
        for r in run_property_suite(g, 1000, seed=2, field_trials=0):
            if r.name in ("left_invariance", "chainability", "local_linearity", "log_exp_log"):
                worst[r.name] = max(worst.get(r.name, 0.0), r.max_residual)
                ok = ok and r.passed
    dt = time.perf_counter() - t0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report("criterion 2", ok and dt < 30.0, f"{detail}, {dt:.1f} s")


def test_criterion_3_euclidean_reduction():
    rng, worst = np.random.default_rng(3), 0.0
    for m in (2, 3, 6):
        g = translation_group(m)
        for _ in range(200):
            a, b = rng.normal(size=m), rng.normal(size=m)
            V, W = translation_element(a), translation_element(b)
            worst = max(worst, abs(ee_distance(g, V, W) - np.linalg.norm(a - b)))
            sigma = rng.uniform()
            P = path_generate(g, sigma, V, W)
            worst = max(worst, np.max(np.abs(P - translation_element((1 - sigma) * a + sigma * b))))
    report("criterion 3", worst <= 1e-12, f"max residual {worst:.1e}")


def test_criterion_4_orthogonality(composed):
    r = orthogonality_residuals(composed, np.random.default_rng(4), 500, FieldConfig())
    report("criterion 4", r.max() <= TOLERANCES["orthogonality"],
           f"forward eps=1e-3: max {r.max():.2e}, {(r > 1e-4).sum()}/500 over")


def test_criterion_4_central_variant(composed):
    r = orthogonality_residuals(composed, np.random.default_rng(4), 500, CENTRAL)
    report("criterion 4 (central, refined s*)", r.max() <= TOLERANCES["orthogonality"], f"max {r.max():.2e}")


def test_criterion_5_lyapunov(composed):
    r = lyapunov_residuals(composed, np.random.default_rng(5), 200, FieldConfig())
    report("criterion 5", r.max() <= 0.05, f"forward eps=1e-3: max rel {r.max():.2e}, {(r > 0.05).sum()}/200 over")


def test_criterion_5_central_variant(composed):
    r = lyapunov_residuals(composed, np.random.default_rng(5), 200, CENTRAL)
    report("criterion 5 (central, refined s*)", r.max() <= 0.05, f"max rel {r.max():.2e}")


def _laps(s_star):
    step = np.diff(s_star)
    return float(np.sum(step - np.round(step)))


def _convergence(scheme):
    curve = screw_se3(n_samples=5000, check_simple=False)
    H0 = se3_from(rotation([1, 1, 0], 0.2), [0.35, 0.05, 0.45])
    t0 = time.perf_counter()
    tr = run(SimulationConfig(dt=0.01, duration=150.0, initial_state=H0, scheme=scheme), curve)
    dt = time.perf_counter() - t0
    below = np.flatnonzero(tr.D < 1e-4)
    after = float(tr.D[below[0]:].max()) if below.size else math.inf
    laps = _laps(tr.s_star)
    ok = tr.D[-1] <= 1e-2 and below.size > 0 and after <= 1e-3 and laps >= 1.0 and dt < 120.0
    first = f"{tr.t[below[0]]:.2f} s" if below.size else "never"
    return ok, (f"final D {tr.D[-1]:.2e}, below 1e-4 at {first}, max after {after:.2e}, "
                f"min D {tr.D.min():.2e}, laps {laps:.2f}, {dt:.0f} s")


def test_criterion_6_convergence():
    ok, detail = _convergence("forward")
    report("criterion 6", ok, detail)


def test_criterion_6_central_variant():
    ok, detail = _convergence("central")
    report("criterion 6 (central)", ok, detail)


def test_criterion_7_escape():
    curve = circle_t2(5000)
    tr = run(SimulationConfig(dt=0.01, duration=100.0, initial_state=translation_element([0.0, 0.0])), curve)
    ok = bool(tr.near_tie[0]) and tr.escape_count <= 3 and tr.D[-1] <= 1e-3
    report("criterion 7", ok, f"tie at t=0 {bool(tr.near_tie[0])}, escapes {tr.escape_count}, final D {tr.D[-1]:.2e}")


def test_criterion_8_profile():
    r = bench_field_eval(N=5000, trials=100, workers=(1, 4), seed=8)
    ok = r.fraction_in_search >= 0.9 and r.speedup_vs_serial[4] >= 2.0 and r.bit_identical
    report("criterion 8", ok,
           f"in search {100 * r.fraction_in_search:.1f} %, speedup@4 {r.speedup_vs_serial[4]:.2f} "
           f"on {r.cpu_count} cpu(s), bit-identical {r.bit_identical}, "
           f"{r.per_iteration_mean:.2f} ms/iteration")


def _chain_rule(scheme):
    g, rng, worst = se3(), np.random.default_rng(9), 0.0
    for _ in range(100):
        W = random_element(g, rng)
        H = W @ random_element(g, rng, max_angle=math.pi - 0.1)
        zeta = rng.normal(size=6)
        f = lambda X, W=W: ee_distance(g, X, W)
        G = lambda s, H=H, zeta=zeta: g.exp(s_map(g, zeta) * s) @ H
        h = 1e-6
        lhs = (f(G(h)) - f(G(-h))) / (2 * h)
        L, Xi = l_operator(g, f, H, scheme=scheme), xi_operator(g, G, 0.0)
        worst = max(worst, abs(lhs - L @ Xi) / (np.linalg.norm(L) * np.linalg.norm(Xi)))
    return worst


def test_criterion_9_chain_rule():
    worst = _chain_rule("forward")
    report("criterion 9", worst <= 1e-3, f"forward eps=1e-3: max rel {worst:.2e}")


def test_criterion_9_central_variant():
    worst = _chain_rule("central")
    report("criterion 9 (central)", worst <= 1e-3, f"max rel {worst:.2e}")
