import math

import numpy as np
import pytest

from expp import cm_sets, objectives, oracle


def test_enumerate_examples():
    assert len(oracle.enumerate_set(cm_sets.binary(3))) == 8
    assert len(oracle.enumerate_set(cm_sets.selection_vector(4, 2))) == 6
    assert len(oracle.enumerate_set(cm_sets.partial_permutation(3, 2))) == 6


@pytest.mark.parametrize("spec,count", [
    (cm_sets.binary(5), 2**5),
    (cm_sets.mpsk(3, 3), 3**3),
    (cm_sets.unit_vector(6), 6),
    (cm_sets.selection_vector(6, 3), math.comb(6, 3)),
    (cm_sets.partial_permutation(5, 3), math.perm(5, 3)),
    (cm_sets.size_assignment(6, (2, 1, 2)),
     math.factorial(6) // (math.factorial(2) * math.factorial(1) * math.factorial(2) * math.factorial(1))),
    (cm_sets.product(cm_sets.binary(2), cm_sets.unit_vector(3)), 12),
])
def test_enumeration_counts(spec, count):
    members = oracle.enumerate_set(spec)
    assert oracle.set_size(spec) == count == len(members)
    flat = {tuple(np.round(cm_sets.to_real(spec, v).ravel(), 12)) for v in members}
    assert len(flat) == count
    assert all(cm_sets.contains(spec, v) for v in members)


def test_enumerate_errors():
    with pytest.raises(oracle.InfiniteSetError):
        oracle.enumerate_set(cm_sets.unit_sphere(2))
    with pytest.raises(oracle.BudgetExceeded):
        oracle.enumerate_set(cm_sets.binary(10), oracle.EnumerationBudget(100))
    with pytest.raises(ValueError):
        oracle.EnumerationBudget(0)


def test_brute_min_examples():
    x, f = oracle.brute_min(objectives.quadratic(np.eye(2), [0.3, -0.2]), cm_sets.binary(2))
    np.testing.assert_array_equal(x, [1, -1])
    assert f == pytest.approx(1.13, abs=1e-15)
    spec = cm_sets.binary(3)
    x, f = oracle.brute_min(objectives.constant(1.0), spec)
    np.testing.assert_array_equal(x, oracle.enumerate_set(spec)[0])
    x, f = oracle.brute_min(objectives.quad_form(np.zeros((3, 3)), [-1.0, -2.0, -3.0]),
                            cm_sets.unit_vector(3))
    np.testing.assert_array_equal(x, [0, 0, 1])
    assert f == -3


def test_brute_dist_examples():
    assert oracle.brute_dist(cm_sets.binary(2), np.zeros(2)) == pytest.approx(math.sqrt(2))
    spec = cm_sets.size_assignment(4, (1, 2))
    rng = np.random.default_rng(0)
    for _ in range(10):
        v = oracle.random_member(spec, rng)
        assert oracle.brute_dist(spec, v) == 0
    X = oracle.random_hull_point(spec, rng)
    members = oracle.enumerate_set(spec)
    assert oracle.brute_dist(spec, X) == pytest.approx(min(np.linalg.norm(X - v) for v in members))


@pytest.mark.parametrize("spec", [
    cm_sets.binary(4), cm_sets.mpsk(4, 2), cm_sets.unit_vector(5), cm_sets.selection_vector(5, 2),
])
def test_brute_dist_zero_at_rounding(spec):
    rng = np.random.default_rng(1)
    shape = cm_sets.real_shape(spec)
    for _ in range(50):
        z = cm_sets.from_real(spec, rng.normal(size=shape))
        assert oracle.brute_dist(spec, cm_sets.round_to_set(spec, z)) <= 1e-12


def test_nonneg_stiefel_dist_against_sampling():
    # no sampled member of V may come closer than the exact distance
    rng = np.random.default_rng(2)
    spec = cm_sets.nonneg_semi_orthogonal(4, 2)
    for _ in range(20):
        X = rng.normal(size=(4, 2))
        d = oracle.nonneg_stiefel_dist(X)
        sampled = min(np.linalg.norm(X - oracle.random_member(spec, rng)) for _ in range(500))
        assert d <= sampled + 1e-12
        assert d <= np.linalg.norm(X - cm_sets.round_to_set(spec, X)) + 1e-12


def test_nonneg_stiefel_dist_members():
    rng = np.random.default_rng(3)
    spec = cm_sets.nonneg_semi_orthogonal(6, 3)
    for _ in range(20):
        assert oracle.brute_dist(spec, oracle.random_member(spec, rng)) <= 1e-12


def test_counterexample_examples():
    d, lo = oracle.counterexample_gap(math.pi / 2, 0j)
    assert d == pytest.approx(1) and lo == pytest.approx(0.5)
    phi = 0.7
    d, lo = oracle.counterexample_gap(phi, complex(math.cos(phi), math.sin(phi)))
    assert d == pytest.approx(0, abs=1e-15) and lo == pytest.approx(0, abs=1e-15)
    d, lo = oracle.counterexample_gap(0.1, complex(math.cos(0.1), 0.0))
    assert d == pytest.approx(math.sin(0.1), rel=1e-12)
    assert lo == pytest.approx(math.sin(0.1) / 2, rel=1e-12)


def test_counterexample_rejects_off_segment():
    with pytest.raises(ValueError):
        oracle.counterexample_gap(0.5, 0.2 + 0j)
    with pytest.raises(ValueError):
        oracle.counterexample_gap(0.0, 1 + 0j)


def test_fd_gradient_examples():
    rng = np.random.default_rng(4)
    quad = objectives.quadratic(rng.normal(size=(3, 3)), rng.normal(size=3))
    assert oracle.fd_gradient_check(quad, rng.normal(size=3), 1e-5) <= 1e-5
    assert oracle.fd_gradient_check(objectives.constant(3.0), rng.normal(size=3)) == 0
    affine = objectives.quad_form(np.zeros((3, 3)), [1.0, -2.0, 0.5])
    assert oracle.fd_gradient_check(affine, rng.normal(size=3)) <= 1e-10


@pytest.mark.parametrize("spec", [
    cm_sets.binary(3), cm_sets.mpsk(8, 2), cm_sets.unit_sphere(3), cm_sets.semi_orthogonal(3, 2),
    cm_sets.unit_vector(4), cm_sets.selection_vector(4, 2), cm_sets.partial_permutation(3, 2),
    cm_sets.size_assignment(4, (1, 2)), cm_sets.nonneg_semi_orthogonal(4, 2),
])
def test_samplers_stay_in_hull(spec):
    rng = np.random.default_rng(5)
    for _ in range(200):
        assert cm_sets.contains(spec, oracle.random_member(spec, rng))
        assert cm_sets.hull_contains(spec, oracle.random_hull_point(spec, rng))
