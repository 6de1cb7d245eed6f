import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lievf.distance import (ALPHA_SERIES_THETA, SQRT2_PI, _alpha, batch_distance, check_chainability,
                            check_left_invariance, check_local_linearity, ee_distance, ee_distance_generic,
                            ee_distance_se3, group_log, log_exp_log_identity, path_generate, rotation_angle)
from lievf.groups import (random_element, rotation, se3, se3_from, so3, translation_element,
                          translation_group)


def mp_alpha(theta):
    mpmath.mp.dps = 50
    th = mpmath.mpf(theta)
    u = mpmath.cos(th)
    return float((2 - 2 * u - th ** 2) / (4 * (1 - u) ** 2))


def test_identical_poses():
    H = se3_from(rotation([1, 0, 0], 0.4), [1, 2, 3])
    d, diag = ee_distance_se3(H, H)
    assert d == 0.0 and diag.theta == 0.0 and diag.branch == "principal"
    assert ee_distance_generic(se3(), H, H) <= 1e-15


def test_pure_translation_unit():
    d, diag = ee_distance_se3(np.eye(4), se3_from(t=[0.6, 0.0, 0.8]))
    assert d == pytest.approx(1.0, abs=1e-15)
    assert diag.translation_norm_sq == pytest.approx(1.0, abs=1e-15)


def test_quarter_turn_generic_and_closed_form():
    W = se3_from(rotation([0, 0, 1], math.pi / 2))
    expected = math.sqrt(2) * math.pi / 2
    assert ee_distance_generic(se3(), np.eye(4), W) == pytest.approx(expected, rel=1e-12)
    assert ee_distance_se3(np.eye(4), W)[0] == pytest.approx(expected, rel=1e-12)


def test_rotation_with_translation_matches_generic():
    W = se3_from(rotation([1, 0, 0], 1.0), [1.0, 0.0, 0.0])
    assert abs(ee_distance_se3(np.eye(4), W)[0] - ee_distance_generic(se3(), np.eye(4), W)) <= 1e-9


def test_translation_group_is_euclidean():
    g = translation_group(2)
    assert ee_distance_generic(g, translation_element([0, 0]), translation_element([3, 4])) == 5.0


@pytest.mark.parametrize("theta", [1e-8, 1e-5, 1e-3, 1e-2, 0.1, ALPHA_SERIES_THETA * 0.999,
                                   ALPHA_SERIES_THETA * 1.001, 1.0, 2.5, 3.1])
def test_alpha_against_high_precision(theta):
    assert _alpha(theta, math.cos(theta)) == pytest.approx(mp_alpha(theta), rel=1e-12)


def test_alpha_limit():
    assert _alpha(0.0, 1.0) == -1.0 / 12.0


def test_oracle_equivalence_random(rng):
    g = se3()
    for _ in range(300):
        V = random_element(g, rng)
        W = V @ se3_from(rotation(rng.normal(size=3), rng.uniform(0, math.pi - 1e-3)), rng.normal(size=3))
        d = ee_distance_se3(V, W)[0]
        assert abs(d - ee_distance_generic(g, V, W)) <= 1e-9 * (1 + d)


def test_small_angles_match_generic(rng):
    g = se3()
    for angle in (1e-9, 1e-6, 1e-4, 3e-3, 9.9e-3, 1.01e-2):
        W = se3_from(rotation(rng.normal(size=3), angle), rng.normal(size=3))
        d = ee_distance_se3(np.eye(4), W)[0]
        assert abs(d - ee_distance_generic(g, np.eye(4), W)) <= 1e-9 * (1 + d)


@pytest.mark.parametrize("axis", [[0, 0, 1], [1, 1, 0]])
def test_continuous_across_pi(axis):
    t = np.array([0.3, -0.2, 0.5])
    at_pi = ee_distance_se3(np.eye(4), se3_from(rotation(axis, math.pi), t))[0]
    for eps in (1e-4, 1e-6, 1e-8):
        below = ee_distance_se3(np.eye(4), se3_from(rotation(axis, math.pi - eps), t))[0]
        assert abs(below - at_pi) <= 10 * eps
    assert ee_distance_se3(np.eye(4), se3_from(rotation(axis, math.pi)))[1].branch == "boundary"


def test_generic_falls_back_at_pi():
    W = se3_from(rotation([0, 1, 0], math.pi), [0.1, 0.0, 0.0])
    assert ee_distance_generic(se3(), np.eye(4), W) == ee_distance_se3(np.eye(4), W)[0]
    assert ee_distance_se3(np.eye(4), se3_from(rotation([0, 1, 0], math.pi)))[0] == pytest.approx(SQRT2_PI)


def test_boundary_log_exponentiates_back():
    g = se3()
    X = se3_from(rotation([1, 2, 2], math.pi), [0.4, -0.1, 0.3])
    np.testing.assert_allclose(g.exp(group_log(g, X)), X, atol=1e-12)


def test_so3_distance(rng):
    g = so3()
    for _ in range(50):
        V, W = random_element(g, rng), random_element(g, rng, max_angle=3.0)
        assert ee_distance(g, V, W) == pytest.approx(ee_distance_generic(g, V, W), rel=1e-10)


def test_rotation_angle_range(rng):
    for _ in range(100):
        a = rng.uniform(0, math.pi)
        assert rotation_angle(rotation(rng.normal(size=3), a)) == pytest.approx(a, abs=1e-7)


def test_batch_matches_scalar(rng):
    g = se3()
    V = np.stack([random_element(g, rng) for _ in range(50)])
    W = np.stack([random_element(g, rng) for _ in range(50)])
    scalar = np.array([ee_distance_se3(v, w)[0] for v, w in zip(V, W)])
    np.testing.assert_allclose(batch_distance(g, V, W), scalar, rtol=1e-13, atol=1e-15)


def test_path_endpoints(rng):
    g = se3()
    V, W = random_element(g, rng), random_element(g, rng, max_angle=3.0)
    np.testing.assert_allclose(path_generate(g, 0.0, V, W), V, atol=1e-10)
    np.testing.assert_allclose(path_generate(g, 1.0, V, W), W, atol=1e-10)


def test_path_is_linear_on_translations():
    g = translation_group(2)
    P = path_generate(g, 0.5, translation_element([0, 0]), translation_element([2, 4]))
    np.testing.assert_allclose(P[:2, 2], [1, 2], atol=1e-15)


def test_property_probe_examples(rng):
    g = se3()
    V, W = random_element(g, rng), random_element(g, rng, max_angle=3.0)
    assert check_left_invariance(g, np.eye(4), V, W) == 0.0
    assert check_left_invariance(g, random_element(g, rng), V, W) <= 1e-9
    for s in (0.0, 1.0):
        assert check_chainability(g, V, W, s) <= 1e-10
    assert check_chainability(g, V, W, 0.3) <= 1e-8
    assert check_local_linearity(g, V, W, [1e-2, 1e-4]) == pytest.approx(ee_distance(g, V, W), abs=1e-6)
    assert check_local_linearity(g, V, V, [1e-4]) == 0.0
    assert log_exp_log_identity(g, W, 0.0) == 0.0
    assert log_exp_log_identity(g, W, 1.0) <= 1e-9
    assert log_exp_log_identity(g, W, 0.7) <= 1e-9
    T2 = translation_group(2)
    assert check_local_linearity(T2, translation_element([0, 0]), translation_element([3, 4]), [1e-4]) == \
        pytest.approx(5.0, abs=1e-12)


def test_translation_probes_are_exact(rng):
    g = translation_group(3)
    V, W, A = (random_element(g, rng) for _ in range(3))
    assert check_left_invariance(g, A, V, W) <= 1e-12
    assert check_chainability(g, V, W, rng.uniform()) <= 1e-12


def test_positive_definite(rng):
    g = se3()
    V = random_element(g, rng)
    W = V @ se3_from(rotation([1, 0, 0], 1e-9), [1e-10, 0, 0])
    d = ee_distance(g, V, W)
    assert d > 0
    assert ee_distance(g, V, V.copy()) == 0.0


angles = st.floats(0.0, math.pi - 1e-3)
vec = st.tuples(*[st.floats(-3, 3)] * 3)


@settings(max_examples=300, deadline=None)
@given(angles, vec, vec)
def test_closed_form_agrees_with_log(angle, axis, t):
    if np.linalg.norm(axis) < 1e-3:
        axis = (0.0, 0.0, 1.0)
    W = se3_from(rotation(axis, angle), t)
    d = ee_distance_se3(np.eye(4), W)[0]
    assert abs(d - ee_distance_generic(se3(), np.eye(4), W)) <= 1e-9 * (1 + d)
