import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lievf.distance import distance_function
from lievf.groups import (GroupError, MembershipError, SpanError, body_frame_twist, check_member,
                          group_exp_step, group_from_name, l_operator, membership_residual, random_element,
                          reorthonormalize, rotation, s_inv, s_map, se3, se3_from, skew, so3,
                          translation_element, translation_group, xi_operator)

GROUPS = [se3(), so3(), translation_group(2), translation_group(3), translation_group(6)]
twists6 = arrays(np.float64, 6, elements=st.floats(-5, 5))


def test_se3_basis_layout():
    g = se3()
    E1 = s_map(g, np.eye(6)[0])
    assert E1[0, 3] == 1.0 and np.count_nonzero(E1) == 1
    Ez = s_map(g, np.eye(6)[5])
    np.testing.assert_array_equal(Ez[:3, :3], [[0, -1, 0], [1, 0, 0], [0, 0, 0]])
    assert not Ez[:, 3].any()


def test_translation_basis_layout():
    g = translation_group(3)
    for k in range(3):
        E = g.basis[k]
        assert E[k, 3] == 1.0 and np.count_nonzero(E) == 1


@pytest.mark.parametrize("g", GROUPS, ids=lambda g: g.name)
def test_s_map_zero_and_inverse(g, rng):
    assert not s_map(g, np.zeros(g.algebra_dim)).any()
    assert not s_inv(g, np.zeros((g.matrix_order,) * 2)).any()
    z = rng.normal(size=g.algebra_dim)
    np.testing.assert_allclose(s_inv(g, s_map(g, z)), z, atol=1e-12)


def test_s_inv_so3_by_hand():
    np.testing.assert_allclose(s_inv(so3(), skew([1, 2, 3])), [1, 2, 3], atol=1e-15)


def test_s_inv_rejects_off_algebra():
    with pytest.raises(SpanError, match="not in algebra span"):
        s_inv(se3(), np.eye(4))


def test_s_map_length_mismatch():
    with pytest.raises(GroupError):
        s_map(se3(), np.zeros(5))


@settings(max_examples=100, deadline=None)
@given(twists6)
def test_s_map_is_linear(z):
    g = se3()
    np.testing.assert_allclose(s_map(g, 2 * z), 2 * s_map(g, z))
    np.testing.assert_allclose(s_inv(g, s_map(g, z)), z, atol=1e-12)


def test_xi_of_constant_twist_path(rng):
    g = se3()
    z = rng.normal(size=6)
    H0 = random_element(g, rng)
    G = lambda s: g.exp(s_map(g, z) * s) @ H0
    for s in (0.0, 0.4, 1.3):
        np.testing.assert_allclose(xi_operator(g, G, s), z, atol=1e-7)
    np.testing.assert_allclose(xi_operator(g, lambda s: H0, 0.2), np.zeros(6), atol=1e-12)


def test_xi_of_pitched_screw_matches_analytic():
    # rotation about z through (1, 0, 0) with pitch 0.3: analytic twist below
    w, q, pitch = np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]), 0.3

    def G(s):
        R = rotation(w, s)
        return se3_from(R, (np.eye(3) - R) @ q + pitch * s * w)

    expected = np.concatenate((np.cross(q, w) + pitch * w, w))
    np.testing.assert_allclose(xi_operator(se3(), G, 0.7), expected, atol=1e-8)


def test_l_operator_constant_is_zero(rng):
    g = se3()
    assert not l_operator(g, lambda H: 3.0, random_element(g, rng)).any()


def test_l_operator_linear_translation_exact():
    g = translation_group(2)
    np.testing.assert_allclose(l_operator(g, lambda H: H[0, 2], translation_element([0.3, -1])), [1, 0],
                               atol=1e-6)


def test_l_operator_matches_central_oracle(rng):
    g = se3()
    for _ in range(10):
        H, W = random_element(g, rng), random_element(g, rng, max_angle=2.0)
        f = distance_function(g, W)
        fwd = l_operator(g, f, H)
        ref = l_operator(g, f, H, eps=1e-5, scheme="central")
        assert np.linalg.norm(fwd - ref) <= 5e-3 * np.linalg.norm(ref)


def test_l_operator_non_finite():
    with pytest.raises(GroupError, match="objective non-finite"):
        l_operator(se3(), lambda H: math.nan, np.eye(4))


def test_body_frame_twist(rng):
    g = se3()
    z = rng.normal(size=6)
    np.testing.assert_allclose(body_frame_twist(g, np.eye(4), z), z, atol=1e-15)
    Rz = se3_from(rotation([0, 0, 1], 0.8))
    wz = np.array([0, 0, 0, 0, 0, 1.5])
    np.testing.assert_allclose(body_frame_twist(g, Rz, wz), wz, atol=1e-15)
    H = random_element(g, rng)
    zb = body_frame_twist(g, H, z)
    np.testing.assert_allclose(s_map(g, z) @ H, H @ s_map(g, zb), atol=1e-10)


def test_exp_step_trivial_cases(rng):
    g = se3()
    H = random_element(g, rng)
    np.testing.assert_array_equal(group_exp_step(g, H, rng.normal(size=6), 0.0), H)
    np.testing.assert_array_equal(group_exp_step(g, H, np.zeros(6), 0.1), H)


def test_exp_step_half_steps(rng):
    g = se3()
    H, z = random_element(g, rng), rng.normal(size=6)
    two = group_exp_step(g, group_exp_step(g, H, z, 0.05), z, 0.05)
    np.testing.assert_allclose(two, group_exp_step(g, H, z, 0.1), atol=1e-12)


@pytest.mark.parametrize("g", GROUPS, ids=lambda g: g.name)
def test_exp_step_stays_on_group(g, rng):
    H = random_element(g, rng)
    for _ in range(200):
        H = group_exp_step(g, H, rng.normal(size=g.algebra_dim), 0.05)
    assert membership_residual(g, H) <= 1e-8


def test_reorthonormalize_repairs_drift(rng):
    g = se3()
    H = random_element(g, rng)
    H[:3, :3] += 1e-7 * rng.normal(size=(3, 3))
    assert membership_residual(g, H) > 1e-8
    assert membership_residual(g, reorthonormalize(g, H)) <= 1e-12


def test_membership_rejects_reflection():
    g = se3()
    with pytest.raises(MembershipError, match="off-group sample"):
        check_member(g, np.diag([1.0, 1.0, -1.0, 1.0]))


def test_group_from_name():
    assert group_from_name("SE3") is se3()
    assert group_from_name("T3") is translation_group(3)
    assert group_from_name("T", 4).algebra_dim == 4
    with pytest.raises(GroupError):
        group_from_name("SL2")
