import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from expp import hull_projections as hp

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


# -- box / simplex / capped simplex ---------------------------------------------

def test_clip_box_examples():
    np.testing.assert_array_equal(hp.clip_box([2, -3], -1, 1), [1, -1])
    np.testing.assert_array_equal(hp.clip_box([0.2, -0.4], -1, 1), [0.2, -0.4])
    np.testing.assert_array_equal(hp.clip_box([0.5], -1, 1), [0.5])


def test_clip_box_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        hp.clip_box([0.0, 0.0], [0.0, 1.0], [1.0, 0.5])


def test_simplex_examples():
    np.testing.assert_allclose(hp.project_simplex([0.5, 0.5, 0.5]), [1 / 3] * 3, atol=1e-15)
    np.testing.assert_allclose(hp.project_simplex([2, 0, 0]), [1, 0, 0])
    # dense grid over the simplex (spacing 1/600) lands on (1.1, 1.1, 0.8) / 3
    np.testing.assert_allclose(hp.project_simplex([0.3, 0.3, 0.2]), np.array([1.1, 1.1, 0.8]) / 3,
                               atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(arrays(float, st.integers(1, 12), elements=finite))
def test_simplex_output_is_on_simplex(z):
    x = hp.project_simplex(z)
    assert np.all(x >= 0)
    assert abs(x.sum() - 1) <= 1e-12


def test_capped_simplex_examples():
    np.testing.assert_allclose(hp.project_capped_simplex([1, 1, 0, 0], 2), [1, 1, 0, 0])
    np.testing.assert_allclose(hp.project_capped_simplex([5, 5, 5, 5], 2), [0.5] * 4)
    # a dense scan of tau over [min z - 1, max z] puts the root at tau = 0: a fixed point
    np.testing.assert_allclose(hp.project_capped_simplex([0.9, 0.1, 0.8, 0.2], 2),
                               [0.9, 0.1, 0.8, 0.2], atol=1e-12)


def test_capped_simplex_rejects_bad_kappa():
    with pytest.raises(ValueError):
        hp.project_capped_simplex([0.1, 0.2], 3)
    with pytest.raises(ValueError):
        hp.project_capped_simplex([0.1, 0.2], 0)


@settings(max_examples=200, deadline=None)
@given(arrays(float, st.integers(1, 10), elements=finite), st.data())
def test_capped_simplex_feasible(z, data):
    k = data.draw(st.integers(1, z.size))
    x = hp.project_capped_simplex(z, k)
    assert np.all((x >= 0) & (x <= 1))
    assert abs(x.sum() - k) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(arrays(float, st.integers(1, 10), elements=finite))
def test_capped_simplex_kappa_one_matches_simplex(z):
    np.testing.assert_allclose(hp.project_capped_simplex(z, 1), hp.project_simplex(z), atol=1e-9)


# -- balls --------------------------------------------------------------------------

def test_l2_ball_examples():
    np.testing.assert_allclose(hp.project_l2_ball([3, 4]), [0.6, 0.8])
    np.testing.assert_array_equal(hp.project_l2_ball([0.1, 0.2]), [0.1, 0.2])
    np.testing.assert_array_equal(hp.project_l2_ball([0.0, 0.0]), [0.0, 0.0])


def test_spectral_ball_examples():
    np.testing.assert_allclose(hp.project_spectral_ball(2 * np.eye(3)), np.eye(3), atol=1e-12)
    Z = np.array([[0.3, 0.1], [-0.2, 0.4], [0.1, 0.0]])
    np.testing.assert_allclose(hp.project_spectral_ball(Z), Z, atol=1e-10)
    # sampling points of the 2x2 spectral ball confirms the variational inequality at diag(1, 0.5)
    np.testing.assert_allclose(hp.project_spectral_ball(np.diag([3.0, 0.5])), np.diag([1.0, 0.5]),
                               atol=1e-12)


def test_spectral_ball_norm_bound():
    rng = np.random.default_rng(3)
    for _ in range(100):
        X = hp.project_spectral_ball(5 * rng.normal(size=(6, 3)))
        assert np.linalg.norm(X, 2) <= 1 + 1e-10


def test_deterministic_svd_sign_convention():
    rng = np.random.default_rng(4)
    Z = rng.normal(size=(5, 3))
    U, s, Vt = hp.deterministic_svd(Z)
    np.testing.assert_allclose((U * s) @ Vt, Z, atol=1e-12)
    for i in range(s.size):
        col = U[:, i]
        assert col[np.flatnonzero(np.abs(col) > 1e-14)[0]] >= 0
    U2, _, _ = hp.deterministic_svd(Z.copy())
    np.testing.assert_array_equal(U, U2)


# -- MPSK ---------------------------------------------------------------------------

def test_mpsk_examples():
    # fine grid over P_4 (spacing 5e-4) gives 0.707 (1 + j)
    np.testing.assert_allclose(hp.project_mpsk_hull(1 + 1j, 4), (math.sqrt(2) / 2) * (1 + 1j),
                               atol=1e-15)
    np.testing.assert_allclose(hp.project_mpsk_hull(10.0, 8), math.cos(math.pi / 8), atol=1e-15)
    assert hp.project_mpsk_hull(0j, 5) == 0
    inside = 0.3 * np.exp(1j * np.linspace(0, 6, 7))
    np.testing.assert_allclose(hp.project_mpsk_hull(inside, 6), inside, atol=1e-15)


def test_mpsk_rejects_small_order():
    with pytest.raises(ValueError):
        hp.project_mpsk_hull(1j, 2)


@pytest.mark.parametrize("m", [3, 4, 5, 8])
def test_mpsk_halfspace_and_sector_membership_agree(m):
    # z is in P_m iff the sector projection leaves it unchanged
    t = np.linspace(-1.5, 1.5, 301)
    G = (t[:, None] + 1j * t[None, :]).ravel()
    rot = np.exp(1j * 2 * np.pi * np.arange(m) / m)
    half = np.all((rot[None, :] * G[:, None]).real <= math.cos(math.pi / m) + 1e-12, axis=1)
    fixed = np.abs(hp.project_mpsk_hull(G, m) - G) <= 1e-12
    np.testing.assert_array_equal(half, fixed)


# -- row cap ---------------------------------------------------------------------------

def test_row_cap_examples():
    np.testing.assert_allclose(hp.project_row_cap([0.2, 0.3]), [0.2, 0.3])
    np.testing.assert_allclose(hp.project_row_cap([1, 1]), [0.5, 0.5])
    # tau scan: clip(z - 0.4) sums to 1
    np.testing.assert_allclose(hp.project_row_cap([0.9, 0.9, 0.1]), [0.5, 0.5, 0.0], atol=1e-12)


# -- Dykstra ------------------------------------------------------------------------

def test_dykstra_feasible_point_is_fixed():
    box = lambda X: np.clip(X, 0, 1)
    Z = np.array([[0.2, 0.5], [0.9, 0.1]])
    np.testing.assert_allclose(hp.dykstra(box, box, Z), Z)


def test_dykstra_same_set_is_clip():
    box = lambda X: np.clip(X, 0, 1)
    Z = np.array([[2.0, -1.0], [0.5, 3.0]])
    np.testing.assert_allclose(hp.dykstra(box, box, Z), np.clip(Z, 0, 1))


def test_dykstra_halfplane_box_matches_grid():
    def halfplane(v):
        excess = v.sum() - 1.0
        return v - max(excess, 0.0) / 2.0

    box = lambda v: np.clip(v, 0.0, 1.0)
    # 2001 x 2001 grid of the box restricted to x + y <= 1: nearest point to (1, 1.5) is (0.25, 0.75)
    np.testing.assert_allclose(hp.dykstra(halfplane, box, np.array([1.0, 1.5])), [0.25, 0.75],
                               atol=1e-9)


def test_dykstra_budget_error_carries_iterate():
    def halfplane(v):
        return v - max(v.sum() - 1.0, 0.0) / 2.0

    with pytest.raises(hp.DykstraError) as info:
        hp.dykstra(halfplane, lambda v: np.clip(v, 0.3, 1.0), np.array([3.0, -2.0]),
                   hp.DykstraConfig(max_iter=1, tol=1e-14))
    assert info.value.iterate.shape == (2,)
    assert info.value.residual > 0


def test_dykstra_config_validation():
    with pytest.raises(ValueError):
        hp.DykstraConfig(max_iter=0)
    with pytest.raises(ValueError):
        hp.DykstraConfig(tol=0.0)


def test_assignment_hull_examples():
    X = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(hp.project_assignment_hull(X, (1, 1)), X)
    np.testing.assert_allclose(hp.project_assignment_hull(np.ones((2, 2)), (1, 1)),
                               np.full((2, 2), 0.5), atol=1e-10)


def test_assignment_hull_matches_qp_reference():
    from expp.checks import reference_assignment_projection

    rng = np.random.default_rng(11)
    for _ in range(10):
        Z = rng.normal(size=(3, 2))
        np.testing.assert_allclose(hp.project_assignment_hull(Z, (1, 1)),
                                   reference_assignment_projection(Z, (1, 1)), atol=1e-8)


def test_assignment_hull_rejects_bad_sizes():
    with pytest.raises(ValueError):
        hp.project_assignment_hull(np.zeros((3, 2)), (1, 4))


def test_nonneg_spectral_ball_examples():
    Z = np.array([[0.5, 0.1], [0.2, 0.3]])
    np.testing.assert_allclose(hp.project_nonneg_spectral_ball(Z), Z)
    # grid over the 2x2 non-negative diagonal family puts the nearest point to -I at 0
    np.testing.assert_allclose(hp.project_nonneg_spectral_ball(-np.eye(2)), np.zeros((2, 2)),
                               atol=1e-12)
    np.testing.assert_allclose(hp.project_nonneg_spectral_ball(2 * np.eye(2)), np.eye(2), atol=1e-10)


def test_nonneg_spectral_ball_needs_larger_budget_when_degenerate():
    # the limit point has two unit singular values; convergence is linear but slow
    rng = np.random.default_rng(0)
    cfg = hp.DykstraConfig(max_iter=50_000)
    for _ in range(20):
        X = hp.project_nonneg_spectral_ball(rng.normal(size=(5, 3)), cfg)
        assert X.min() >= -1e-12
        assert np.linalg.norm(X, 2) <= 1 + 1e-8
