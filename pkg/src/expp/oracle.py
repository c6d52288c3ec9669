"""Brute-force ground truth for small CM sets.

Enumeration of the finite families, exhaustive minimization and distance,
the two-point counterexample to linear error bounds, finite-difference
gradient checks, and seeded samplers for members and hull points. Nothing
here calls the closed-form projections it is used to check, except where a
sampler needs a starting point inside the hull.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import cm_sets, objectives
from .cm_sets import Family

__all__ = [
    "EnumerationBudget", "BudgetExceeded", "InfiniteSetError", "BoundViolation",
    "set_size", "search_size", "enumerate_set", "brute_min", "brute_dist",
    "nonneg_stiefel_dist", "counterexample_gap", "fd_gradient_check",
    "random_member", "random_hull_point",
]


@dataclass(frozen=True)
class EnumerationBudget:
    max_points: int = 10**6

    def __post_init__(self):
        if self.max_points < 1:
            raise ValueError("max_points must be positive")


class BudgetExceeded(RuntimeError):
    pass


class InfiniteSetError(ValueError):
    pass


class BoundViolation(AssertionError):
    pass


FINITE = frozenset({Family.BINARY, Family.MPSK, Family.UNIT_VECTOR, Family.SELECTION_VECTOR,
                    Family.PARTIAL_PERMUTATION, Family.SIZE_ASSIGNMENT})


def set_size(spec):
    """``|V|`` for finite families; ``math.inf`` for continuous ones."""
    fam = spec.family
    n = spec.n
    if fam is Family.PRODUCT:
        return math.prod(set_size(f) for f in spec.factors)
    if fam is Family.BINARY:
        return 2**n
    if fam is Family.MPSK:
        return spec.m**n
    if fam is Family.UNIT_VECTOR:
        return n
    if fam is Family.SELECTION_VECTOR:
        return math.comb(n, spec.kappa[0])
    if fam is Family.PARTIAL_PERMUTATION:
        return math.perm(n, spec.r)
    if fam is Family.SIZE_ASSIGNMENT:
        rest = n - sum(spec.kappa)
        return math.factorial(n) // (math.prod(math.factorial(k) for k in spec.kappa)
                                     * math.factorial(rest))
    return math.inf


def search_size(spec):
    """Number of candidates :func:`brute_dist` examines.

    Equals ``|V|`` for finite sets; for NonnegSemiOrthogonal it is the
    number of row-to-column maps, ``r^n``.
    """
    if spec.family is Family.PRODUCT:
        return sum(search_size(f) for f in spec.factors)
    if spec.family is Family.NONNEG_SEMI_ORTHOGONAL:
        return spec.r**spec.n
    return set_size(spec)


def _assignments(n, sizes):
    """Row supports per column: tuples of row-index tuples, column by column."""
    if not sizes:
        yield ()
        return
    free = list(range(n))

    def rec(j, avail):
        if j == len(sizes):
            yield ()
            return
        for rows in itertools.combinations(avail, sizes[j]):
            rest = [i for i in avail if i not in rows]
            for tail in rec(j + 1, rest):
                yield (rows,) + tail

    yield from rec(0, free)


def _members(spec):
    fam = spec.family
    n = spec.n
    if fam is Family.BINARY:
        for signs in itertools.product((-1.0, 1.0), repeat=n):
            yield np.array(signs)
    elif fam is Family.MPSK:
        pts = np.exp(1j * (2 * np.arange(spec.m) + 1) * np.pi / spec.m)
        for idx in itertools.product(range(spec.m), repeat=n):
            yield pts[list(idx)]
    elif fam in (Family.UNIT_VECTOR, Family.SELECTION_VECTOR):
        k = 1 if fam is Family.UNIT_VECTOR else spec.kappa[0]
        for rows in itertools.combinations(range(n), k):
            x = np.zeros(n)
            x[list(rows)] = 1.0
            yield x
    elif fam is Family.PARTIAL_PERMUTATION:
        for rows in itertools.permutations(range(n), spec.r):
            X = np.zeros((n, spec.r))
            X[list(rows), np.arange(spec.r)] = 1.0
            yield X
    elif fam is Family.SIZE_ASSIGNMENT:
        for supports in _assignments(n, spec.kappa):
            X = np.zeros((n, spec.r))
            for j, rows in enumerate(supports):
                X[list(rows), j] = 1.0
            yield X
    else:
        for parts in itertools.product(*(_members(f) for f in spec.factors)):
            yield tuple(parts)


def _require_finite(spec):
    if spec.family is Family.PRODUCT:
        for f in spec.factors:
            _require_finite(f)
    elif spec.family not in FINITE:
        raise InfiniteSetError(f"{spec.family.value} is not a finite set")


def enumerate_set(spec, budget=EnumerationBudget()):
    """Every member of a finite CM set, each exactly once, in a fixed order.

    Raises
    ------
    InfiniteSetError
        For continuous families.
    BudgetExceeded
        If ``|V|`` exceeds ``budget.max_points``.
    """
    _require_finite(spec)
    size = set_size(spec)
    if size > budget.max_points:
        raise BudgetExceeded(f"|V| = {size} exceeds budget {budget.max_points}")
    return list(_members(spec))


@functools.lru_cache(maxsize=64)
def _member_matrix(spec, max_points):
    pts = enumerate_set(spec, EnumerationBudget(max_points))
    return np.stack([cm_sets.to_real(spec, p).ravel() for p in pts])


def brute_min(prob, spec, budget=EnumerationBudget()):
    """Exact minimizer of ``f`` over ``V`` by enumeration (first index wins ties)."""
    pts = enumerate_set(spec, budget)
    shape = cm_sets.real_shape(spec)
    vals = [objectives.value(prob, cm_sets.to_real(spec, p).reshape(shape)) for p in pts]
    i = int(np.argmin(vals))
    return pts[i], float(vals[i])


@functools.lru_cache(maxsize=16)
def _surjections(n, r):
    maps = np.array(list(itertools.product(range(r), repeat=n)), dtype=int).reshape(-1, n)
    covered = np.all([(maps == j).any(axis=1) for j in range(r)], axis=0)
    return maps[covered]


def nonneg_stiefel_dist(X, limit=EnumerationBudget().max_points):
    """Exact distance from ``X`` to the non-negative semi-orthogonal matrices.

    Members have disjoint column supports. For a fixed support ``S`` the best
    unit non-negative column has inner product ``||[x_S]_+||`` with ``x``
    (or ``max_S x`` when that part is zero), and enlarging ``S`` never hurts,
    so it suffices to search all maps from rows onto columns.
    """
    X = np.asarray(X, dtype=float)
    n, r = X.shape
    if r**n > limit:
        raise BudgetExceeded(f"{r}^{n} row maps exceed budget {limit}")
    maps = _surjections(n, r)
    pos_sq = np.maximum(X, 0.0) ** 2
    best = np.zeros(len(maps))
    for j in range(r):
        mask = maps == j
        nrm = np.sqrt(mask @ pos_sq[:, j])
        top = np.where(mask, X[:, j][None, :], -np.inf).max(axis=1)
        best += np.where(nrm > 0, nrm, top)
    # rebuild the optimal member and measure directly; the expansion
    # ||X||^2 + r - 2 <X, V> loses half the digits close to V
    owner = maps[int(np.argmax(best))]
    V = np.zeros_like(X)
    for j in range(r):
        rows = owner == j
        col = np.where(rows, np.maximum(X[:, j], 0.0), 0.0)
        nrm = np.linalg.norm(col)
        if nrm > 0:
            V[:, j] = col / nrm
        else:
            V[np.flatnonzero(rows)[np.argmax(X[rows, j])], j] = 1.0
    return float(np.linalg.norm(X - V))


def brute_dist(spec, x, budget=EnumerationBudget()):
    """Exact ``dist(x, V)`` by exhaustive search."""
    if spec.family is Family.PRODUCT:
        parts = cm_sets.from_real(spec, cm_sets.to_real(spec, x))
        return math.sqrt(sum(brute_dist(f, xi, budget) ** 2 for f, xi in zip(spec.factors, parts)))
    if spec.family is Family.NONNEG_SEMI_ORTHOGONAL:
        return nonneg_stiefel_dist(cm_sets.to_real(spec, x), budget.max_points)
    _require_finite(spec)
    if set_size(spec) > budget.max_points:
        raise BudgetExceeded(f"|V| = {set_size(spec)} exceeds budget {budget.max_points}")
    members = _member_matrix(spec, budget.max_points)
    v = cm_sets.to_real(spec, x).ravel()
    return float(np.sqrt(np.min(np.sum((members - v) ** 2, axis=1))))


def counterexample_gap(phi, x, tol=1e-12):
    """Distance from ``x`` to ``{e^{-j phi}, e^{j phi}}`` and the lower bound ``(1-|x|^2) / (2 sin phi)``.

    ``x`` must lie on the segment between the two points. Returns
    ``(dist, lower)`` and raises :class:`BoundViolation` if
    ``dist < lower - tol``.
    """
    if not 0 < phi <= math.pi / 2:
        raise ValueError("phi must lie in (0, pi/2]")
    x = complex(x)
    seg_tol = 1e-12
    if abs(x.real - math.cos(phi)) > seg_tol or abs(x.imag) > math.sin(phi) + seg_tol:
        raise ValueError("x is not on the segment between e^{-j phi} and e^{j phi}")
    a, b = np.exp(1j * phi), np.exp(-1j * phi)
    dist = min(abs(x - a), abs(x - b))
    lower = (1.0 - abs(x) ** 2) / (2.0 * math.sin(phi))
    if dist < lower - tol:
        raise BoundViolation(f"dist {dist!r} < lower bound {lower!r} at phi={phi}, x={x}")
    return float(dist), float(lower)


def fd_gradient_check(prob, x, h=1e-5):
    """Largest central-difference mismatch of the analytic gradient.

    The error is ``max_i |fd_i - g_i| / max(1, ||g||_inf)``.
    """
    x = np.asarray(x, dtype=float)
    _, g, _ = objectives.evaluate(prob, x)
    fd = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        fd[idx] = (objectives.value(prob, x + e) - objectives.value(prob, x - e)) / (2 * h)
    scale = max(1.0, float(np.max(np.abs(g))) if g.size else 1.0)
    return float(np.max(np.abs(fd - g)) / scale) if g.size else 0.0


# -- samplers --------------------------------------------------------------------

def random_member(spec, rng):
    """A random member of ``V``."""
    fam = spec.family
    n, r = spec.n, spec.r
    if fam is Family.PRODUCT:
        return tuple(random_member(f, rng) for f in spec.factors)
    if fam is Family.BINARY:
        return rng.choice([-1.0, 1.0], size=n)
    if fam is Family.MPSK:
        return np.exp(1j * (2 * rng.integers(spec.m, size=n) + 1) * np.pi / spec.m)
    if fam is Family.UNIT_SPHERE:
        v = rng.normal(size=n)
        return v / np.linalg.norm(v)
    if fam is Family.SEMI_ORTHOGONAL:
        Q, R = np.linalg.qr(rng.normal(size=(n, r)))
        return Q * np.sign(np.diag(R))
    if fam in (Family.UNIT_VECTOR, Family.SELECTION_VECTOR):
        k = 1 if fam is Family.UNIT_VECTOR else spec.kappa[0]
        x = np.zeros(n)
        x[rng.choice(n, size=k, replace=False)] = 1.0
        return x
    if fam is Family.NONNEG_SEMI_ORTHOGONAL:
        rows = rng.permutation(n)
        used = rng.integers(r, n + 1)
        owner = np.concatenate([np.arange(r), rng.integers(r, size=used - r)])
        X = np.zeros((n, r))
        X[rows[:used], owner] = rng.uniform(0.05, 1.0, size=used)
        return X / np.linalg.norm(X, axis=0)
    rows = rng.permutation(n)
    X = np.zeros((n, r))
    start = 0
    for j, k in enumerate(spec.column_sizes):
        X[rows[start:start + k], j] = 1.0
        start += k
    return X


def random_hull_point(spec, rng):
    """A random point of ``conv(V)`` (of ``B+`` for NonnegSemiOrthogonal).

    Mixes convex combinations of random members, points close to a member,
    and shrunken members so samples cover the interior as well as the
    neighbourhood of ``V``.
    """
    if spec.family is Family.PRODUCT:
        return tuple(random_hull_point(f, rng) for f in spec.factors)
    mode = rng.integers(4)
    if mode == 0:
        k = int(rng.integers(1, 6))
        w = rng.dirichlet(np.ones(k))
        return sum(wi * random_member(spec, rng) for wi in w)
    if mode == 1:
        t = 10.0 ** rng.uniform(-6, -0.5)
        return (1 - t) * random_member(spec, rng) + t * random_member(spec, rng)
    if mode == 2 and spec.family is Family.NONNEG_SEMI_ORTHOGONAL:
        G = np.abs(rng.normal(size=(spec.n, spec.r)))
        return G / (np.linalg.norm(G, 2) * rng.uniform(1.0, 3.0))
    if spec.family in (Family.BINARY, Family.MPSK, Family.UNIT_SPHERE,
                       Family.SEMI_ORTHOGONAL, Family.NONNEG_SEMI_ORTHOGONAL):
        # star-shaped about 0: any shrunken member stays in the hull
        return rng.uniform() * random_member(spec, rng)
    k = int(rng.integers(2, 12))
    w = rng.dirichlet(0.3 * np.ones(k))
    return sum(wi * random_member(spec, rng) for wi in w)
