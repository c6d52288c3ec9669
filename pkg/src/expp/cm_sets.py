"""Constant-modulus (CM) constraint sets.

A CM set ``V`` has every member at the same squared norm ``C``. This module
describes the supported families with :class:`CMSetSpec` and provides, per
family: membership, rounding onto ``V``, distance to ``V``, membership in
and projection onto ``conv(V)``, and the error-bound functions that
majorize ``dist(x, V)`` on the hull.

Points are numpy arrays in the family's natural space: real vectors,
real ``n x r`` matrices, or complex vectors for MPSK. A Product point is a
tuple with one point per factor; a flat real array is also accepted and
split along the factors' real views (see :func:`to_real`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import hull_projections as hp

__all__ = [
    "Family",
    "CMSetSpec",
    "InvalidSpecError",
    "DimensionError",
    "HullMembershipError",
    "Distance",
    "DEFAULT_TOL",
    "BRUTE_FORCE_LIMIT",
    "binary", "mpsk", "unit_sphere", "semi_orthogonal", "unit_vector",
    "selection_vector", "partial_permutation", "size_assignment",
    "nonneg_semi_orthogonal", "product",
    "modulus_sq", "contains", "round_to_set", "distance_to_set", "hull_violation",
    "hull_contains", "project_hull", "error_bound_tight", "error_bound_norm",
    "error_bound_constant", "universal_bound", "top_sum",
    "real_shape", "to_real", "from_real", "sq_norm",
    "spec_from_json", "spec_to_json", "point_from_json", "point_to_json",
]

DEFAULT_TOL = 1e-8
# Largest search size for exact assignment-family distances.
BRUTE_FORCE_LIMIT = 200_000


class Family(str, enum.Enum):
    BINARY = "Binary"
    MPSK = "MPSK"
    UNIT_SPHERE = "UnitSphere"
    SEMI_ORTHOGONAL = "SemiOrthogonal"
    UNIT_VECTOR = "UnitVector"
    SELECTION_VECTOR = "SelectionVector"
    PARTIAL_PERMUTATION = "PartialPermutation"
    SIZE_ASSIGNMENT = "SizeAssignment"
    NONNEG_SEMI_ORTHOGONAL = "NonnegSemiOrthogonal"
    PRODUCT = "Product"


MATRIX_FAMILIES = frozenset({
    Family.SEMI_ORTHOGONAL, Family.PARTIAL_PERMUTATION,
    Family.SIZE_ASSIGNMENT, Family.NONNEG_SEMI_ORTHOGONAL,
})


class InvalidSpecError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class HullMembershipError(ValueError):
    """An error-bound function was evaluated outside the hull it is valid on."""


class Distance(NamedTuple):
    value: float
    exact: bool


@dataclass(frozen=True)
class CMSetSpec:
    """Description of one CM constraint set.

    ``n`` is the ambient row count (vector length, or number of MPSK
    symbols), ``r`` the column count of matrix families, ``m`` the MPSK
    order, ``kappa`` the selection size (SelectionVector, one entry) or
    per-column sizes (SizeAssignment), and ``factors`` the component sets of
    a Product.
    """

    family: Family
    n: int = 1
    r: int = 1
    m: int = 4
    kappa: tuple = ()
    factors: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "kappa", tuple(int(k) for k in self.kappa))
        object.__setattr__(self, "factors", tuple(self.factors))
        fam = self.family
        if fam is Family.PRODUCT:
            if not self.factors:
                raise InvalidSpecError("Product needs at least one factor")
            if not all(isinstance(f, CMSetSpec) for f in self.factors):
                raise InvalidSpecError("Product factors must be CMSetSpec")
            return
        if self.n < 1:
            raise InvalidSpecError("n must be positive")
        if fam is Family.MPSK and self.m < 3:
            raise InvalidSpecError("MPSK order m must be at least 3")
        if fam in MATRIX_FAMILIES:
            if self.r < 1:
                raise InvalidSpecError("r must be positive")
            if self.n < self.r:
                raise InvalidSpecError(f"{fam.value} requires n >= r")
        if fam is Family.SELECTION_VECTOR:
            if len(self.kappa) != 1 or not 1 <= self.kappa[0] <= self.n:
                raise InvalidSpecError("SelectionVector needs a single kappa in [1, n]")
        if fam is Family.SIZE_ASSIGNMENT:
            if len(self.kappa) != self.r:
                raise InvalidSpecError("SizeAssignment needs one kappa per column")
            if any(k < 1 or k > self.n for k in self.kappa) or sum(self.kappa) > self.n:
                raise InvalidSpecError("SizeAssignment needs kappa_j in [1, n] and sum(kappa) <= n")

    @property
    def column_sizes(self):
        """Per-column target sums for the assignment families."""
        if self.family is Family.PARTIAL_PERMUTATION:
            return (1,) * self.r
        return self.kappa

    def __str__(self):
        fam = self.family
        if fam is Family.PRODUCT:
            return " x ".join(f"({f})" for f in self.factors)
        if fam is Family.MPSK:
            return f"MPSK(m={self.m}, n={self.n})"
        if fam in MATRIX_FAMILIES:
            extra = f", kappa={list(self.kappa)}" if self.kappa else ""
            return f"{fam.value}({self.n}x{self.r}{extra})"
        if fam is Family.SELECTION_VECTOR:
            return f"SelectionVector(n={self.n}, kappa={self.kappa[0]})"
        return f"{fam.value}(n={self.n})"


# -- constructors ------------------------------------------------------------

def binary(n):
    return CMSetSpec(Family.BINARY, n=n)


def mpsk(m, n=1):
    return CMSetSpec(Family.MPSK, n=n, m=m)


def unit_sphere(n):
    return CMSetSpec(Family.UNIT_SPHERE, n=n)


def semi_orthogonal(n, r):
    return CMSetSpec(Family.SEMI_ORTHOGONAL, n=n, r=r)


def unit_vector(n):
    return CMSetSpec(Family.UNIT_VECTOR, n=n)


def selection_vector(n, kappa):
    return CMSetSpec(Family.SELECTION_VECTOR, n=n, kappa=(kappa,))


def partial_permutation(n, r):
    return CMSetSpec(Family.PARTIAL_PERMUTATION, n=n, r=r)


def size_assignment(n, kappa):
    kappa = tuple(kappa)
    return CMSetSpec(Family.SIZE_ASSIGNMENT, n=n, r=len(kappa), kappa=kappa)


def nonneg_semi_orthogonal(n, r):
    return CMSetSpec(Family.NONNEG_SEMI_ORTHOGONAL, n=n, r=r)


def product(*factors):
    return CMSetSpec(Family.PRODUCT, factors=tuple(factors))


# -- real views --------------------------------------------------------------

def native_shape(spec):
    if spec.family in MATRIX_FAMILIES:
        return (spec.n, spec.r)
    return (spec.n,)


def real_shape(spec):
    """Shape of the real array the solver and objectives work with.

    Matrix families keep their ``(n, r)`` shape; MPSK interleaves real and
    imaginary parts into ``(2n,)``; a Product is the flat concatenation of
    its factors' real views.
    """
    if spec.family is Family.PRODUCT:
        return (sum(math.prod(real_shape(f)) for f in spec.factors),)
    if spec.family is Family.MPSK:
        return (2 * spec.n,)
    return native_shape(spec)


def _real_size(spec):
    return math.prod(real_shape(spec))


def _split(spec, x):
    """Per-factor points of a Product point."""
    if isinstance(x, (tuple, list)):
        if len(x) != len(spec.factors):
            raise DimensionError(
                f"Product point has {len(x)} parts, expected {len(spec.factors)}")
        return [_check_dims(f, xi) for f, xi in zip(spec.factors, x)]
    flat = np.asarray(x, dtype=float).ravel()
    if flat.size != _real_size(spec):
        raise DimensionError(
            f"flat Product point has size {flat.size}, expected {_real_size(spec)}")
    parts, start = [], 0
    for f in spec.factors:
        size = _real_size(f)
        parts.append(from_real(f, flat[start:start + size]))
        start += size
    return parts


def _check_dims(spec, x):
    if spec.family is Family.PRODUCT:
        return tuple(_split(spec, x))
    if spec.family is Family.MPSK:
        x = np.asarray(x, dtype=complex)
        if x.ndim == 0:
            x = x.reshape(1)
    else:
        if np.iscomplexobj(x):
            raise DimensionError(f"{spec.family.value} points must be real")
        x = np.asarray(x, dtype=float)
    if x.shape != native_shape(spec):
        raise DimensionError(
            f"{spec.family.value} point has shape {x.shape}, expected {native_shape(spec)}")
    return x


def to_real(spec, x):
    """Real view of a point (see :func:`real_shape`)."""
    x = _check_dims(spec, x)
    if spec.family is Family.PRODUCT:
        return np.concatenate([to_real(f, xi).ravel() for f, xi in zip(spec.factors, x)])
    if spec.family is Family.MPSK:
        out = np.empty(2 * spec.n)
        out[0::2] = x.real
        out[1::2] = x.imag
        return out
    return np.array(x, dtype=float)


def from_real(spec, v):
    """Inverse of :func:`to_real`."""
    v = np.asarray(v, dtype=float)
    if spec.family is Family.PRODUCT:
        return tuple(_split(spec, v))
    if v.size != _real_size(spec):
        raise DimensionError(f"real view has size {v.size}, expected {_real_size(spec)}")
    if spec.family is Family.MPSK:
        v = v.ravel()
        return v[0::2] + 1j * v[1::2]
    return v.reshape(native_shape(spec)).copy()


def sq_norm(spec, x):
    x = _check_dims(spec, x)
    if spec.family is Family.PRODUCT:
        return float(sum(sq_norm(f, xi) for f, xi in zip(spec.factors, x)))
    return float(np.sum(np.abs(x) ** 2))


# -- basic set geometry -------------------------------------------------------

def modulus_sq(spec):
    """Squared modulus ``C``: the common squared norm of every member."""
    fam = spec.family
    if fam is Family.PRODUCT:
        return float(sum(modulus_sq(f) for f in spec.factors))
    if fam in (Family.BINARY, Family.MPSK):
        return float(spec.n)
    if fam in (Family.UNIT_SPHERE, Family.UNIT_VECTOR):
        return 1.0
    if fam in (Family.SEMI_ORTHOGONAL, Family.PARTIAL_PERMUTATION,
               Family.NONNEG_SEMI_ORTHOGONAL):
        return float(spec.r)
    return float(sum(spec.kappa))


def _mpsk_points(m):
    return np.exp(1j * (2 * np.arange(m) + 1) * np.pi / m)


def _is_zero_one(x, tol):
    return bool(np.all(np.minimum(np.abs(x), np.abs(x - 1.0)) <= tol))


def contains(spec, x, tol=DEFAULT_TOL):
    """True iff ``x`` satisfies every defining equation of ``V`` within ``tol``."""
    x = _check_dims(spec, x)
    fam = spec.family
    if fam is Family.PRODUCT:
        return all(contains(f, xi, tol) for f, xi in zip(spec.factors, x))
    if fam is Family.BINARY:
        return bool(np.all(np.abs(np.abs(x) - 1.0) <= tol))
    if fam is Family.MPSK:
        gaps = np.abs(x[:, None] - _mpsk_points(spec.m)[None, :]).min(axis=1)
        return bool(np.all(gaps <= tol))
    if fam is Family.UNIT_SPHERE:
        return abs(np.linalg.norm(x) - 1.0) <= tol
    if fam in (Family.SEMI_ORTHOGONAL, Family.NONNEG_SEMI_ORTHOGONAL):
        if fam is Family.NONNEG_SEMI_ORTHOGONAL and np.any(x < -tol):
            return False
        return np.linalg.norm(x.T @ x - np.eye(spec.r)) <= tol
    if fam in (Family.UNIT_VECTOR, Family.SELECTION_VECTOR):
        k = 1 if fam is Family.UNIT_VECTOR else spec.kappa[0]
        return _is_zero_one(x, tol) and abs(x.sum() - k) <= tol
    # assignment families
    sizes = np.asarray(spec.column_sizes, dtype=float)
    return (_is_zero_one(x, tol)
            and bool(np.all(np.abs(x.sum(axis=0) - sizes) <= tol))
            and bool(np.all(x.sum(axis=1) <= 1.0 + tol)))


def top_sum(x, k):
    """Sum of the ``k`` largest entries of ``x``."""
    x = np.asarray(x, dtype=float)
    return float(np.sort(x)[::-1][:k].sum())


def _top_indices(x, k):
    # stable sort on -x: equal values keep ascending index order
    return np.argsort(-np.asarray(x, dtype=float), kind="stable")[:k]


def _round_mpsk(x, m):
    ang = np.mod(np.angle(x), 2 * np.pi)
    t = ang * m / (2 * np.pi)
    lower = np.floor(t)
    idx = np.mod(lower, m).astype(int)
    boundary = t == lower
    # on a sector boundary both neighbours are equidistant: take the lower index
    idx[boundary] = np.minimum(np.mod(lower[boundary] - 1, m),
                               np.mod(lower[boundary], m)).astype(int)
    return _mpsk_points(m)[idx]


def _round_assignment(X, sizes):
    n, r = X.shape
    owner = -np.ones(n, dtype=int)
    displaced = []
    # rows claimed by several columns go to the largest entry (lowest column on ties)
    claims = {}
    for j in range(r):
        for i in _top_indices(X[:, j], sizes[j]):
            claims.setdefault(int(i), []).append(j)
    count = np.zeros(r, dtype=int)
    for i in sorted(claims):
        cols = claims[i]
        best = max(cols, key=lambda j: (X[i, j], -j))
        owner[i] = best
        count[best] += 1
        displaced.extend(j for j in cols if j != best)
    for j in sorted(displaced):
        free = np.flatnonzero(owner < 0)
        i = free[np.argmax(X[free, j])]
        owner[i] = j
        count[j] += 1
    Y = np.zeros_like(X)
    rows = np.flatnonzero(owner >= 0)
    Y[rows, owner[rows]] = 1.0
    return Y


def _round_nonneg_stiefel(X):
    n, r = X.shape
    P = np.maximum(X, 0.0)
    owner = np.where(P.max(axis=1) > 0, np.argmax(P, axis=1), -1)
    for j in range(r):
        if np.any(owner == j):
            continue
        free = np.flatnonzero(owner < 0)
        if free.size:
            i = free[np.argmax(X[free, j])]
        else:
            counts = np.bincount(owner, minlength=r)
            donors = np.flatnonzero(counts[owner] >= 2)
            i = donors[np.argmax(X[donors, j])]
        owner[i] = j
    Y = np.zeros_like(X)
    for j in range(r):
        rows = np.flatnonzero(owner == j)
        col = P[rows, j]
        nrm = np.linalg.norm(col)
        if nrm > 0:
            Y[rows, j] = col / nrm
        else:
            Y[rows[np.argmax(X[rows, j])], j] = 1.0
    return Y


def round_to_set(spec, x):
    """Map ``x`` to a member of ``V``.

    Exact Euclidean projection for Binary, MPSK, UnitSphere, SemiOrthogonal,
    UnitVector and SelectionVector (ties: ``0 -> +1``, the zero vector goes to
    ``e_1``, equal candidates resolve to the lowest index). The assignment
    families use a column-wise top-k choice with greedy conflict repair, and
    NonnegSemiOrthogonal normalizes the positive part on a disjoint row
    support; both return members of ``V`` that need not be nearest.
    """
    x = _check_dims(spec, x)
    fam = spec.family
    if fam is Family.PRODUCT:
        return tuple(round_to_set(f, xi) for f, xi in zip(spec.factors, x))
    if fam is Family.BINARY:
        return np.where(x >= 0, 1.0, -1.0)
    if fam is Family.MPSK:
        return _round_mpsk(x, spec.m)
    if fam is Family.UNIT_SPHERE:
        nrm = np.linalg.norm(x)
        if nrm == 0:
            e = np.zeros_like(x)
            e[0] = 1.0
            return e
        return x / nrm
    if fam is Family.SEMI_ORTHOGONAL:
        U, _, Vt = hp.deterministic_svd(x)
        return U @ Vt
    if fam in (Family.UNIT_VECTOR, Family.SELECTION_VECTOR):
        k = 1 if fam is Family.UNIT_VECTOR else spec.kappa[0]
        y = np.zeros_like(x)
        y[_top_indices(x, k)] = 1.0
        return y
    if fam is Family.NONNEG_SEMI_ORTHOGONAL:
        return _round_nonneg_stiefel(x)
    return _round_assignment(x, spec.column_sizes)


def _euclid(spec, a, b):
    if spec.family is Family.PRODUCT:
        return math.sqrt(sum(_euclid(f, ai, bi) ** 2 for f, ai, bi in zip(spec.factors, a, b)))
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def distance_to_set(spec, x, limit=BRUTE_FORCE_LIMIT):
    """Euclidean distance from ``x`` to ``V``.

    Returns a :class:`Distance` whose ``exact`` flag is False when the value
    is only the upper bound ``||x - round_to_set(x)||``. That happens for the
    assignment families and NonnegSemiOrthogonal once the exhaustive search
    would exceed ``limit`` candidates.
    """
    x = _check_dims(spec, x)
    fam = spec.family
    if fam is Family.PRODUCT:
        parts = [distance_to_set(f, xi, limit) for f, xi in zip(spec.factors, x)]
        return Distance(math.sqrt(sum(d.value ** 2 for d in parts)),
                        all(d.exact for d in parts))
    if fam is Family.UNIT_SPHERE:
        return Distance(abs(float(np.linalg.norm(x)) - 1.0), True)
    if fam is Family.SEMI_ORTHOGONAL:
        s = np.linalg.svd(x, compute_uv=False)
        return Distance(float(np.linalg.norm(s - 1.0)), True)
    if fam in (Family.PARTIAL_PERMUTATION, Family.SIZE_ASSIGNMENT,
               Family.NONNEG_SEMI_ORTHOGONAL):
        from . import oracle

        if oracle.search_size(spec) <= limit:
            return Distance(oracle.brute_dist(spec, x, oracle.EnumerationBudget(limit)), True)
        return Distance(_euclid(spec, x, round_to_set(spec, x)), False)
    return Distance(_euclid(spec, x, round_to_set(spec, x)), True)


# -- hulls --------------------------------------------------------------------

def hull_contains(spec, x, tol=DEFAULT_TOL):
    """True iff ``x`` satisfies the defining inequalities of ``conv(V)`` within ``tol``.

    For NonnegSemiOrthogonal this tests the surrogate ``{X >= 0, sigma_1(X) <= 1}``,
    which strictly contains the (unknown) true hull.
    """
    x = _check_dims(spec, x)
    fam = spec.family
    if fam is Family.PRODUCT:
        return all(hull_contains(f, xi, tol) for f, xi in zip(spec.factors, x))
    if fam is Family.BINARY:
        return bool(np.all(np.abs(x) <= 1.0 + tol))
    if fam is Family.MPSK:
        rot = np.exp(1j * 2 * np.pi * np.arange(spec.m) / spec.m)
        lhs = (rot[None, :] * x[:, None]).real
        return bool(np.all(lhs <= np.cos(np.pi / spec.m) + tol))
    if fam is Family.UNIT_SPHERE:
        return float(np.linalg.norm(x)) <= 1.0 + tol
    if fam in (Family.SEMI_ORTHOGONAL, Family.NONNEG_SEMI_ORTHOGONAL):
        if fam is Family.NONNEG_SEMI_ORTHOGONAL and np.any(x < -tol):
            return False
        return float(np.linalg.norm(x, 2)) <= 1.0 + tol
    in_box = bool(np.all((x >= -tol) & (x <= 1.0 + tol)))
    if fam in (Family.UNIT_VECTOR, Family.SELECTION_VECTOR):
        k = 1 if fam is Family.UNIT_VECTOR else spec.kappa[0]
        return in_box and abs(x.sum() - k) <= tol
    sizes = np.asarray(spec.column_sizes, dtype=float)
    return (in_box
            and bool(np.all(np.abs(x.sum(axis=0) - sizes) <= tol))
            and bool(np.all(x.sum(axis=1) <= 1.0 + tol)))


def hull_violation(spec, x):
    """Largest violation of the inequalities and equalities that define ``conv(V)`` (0 inside).

    NonnegSemiOrthogonal uses the surrogate ``{X >= 0, sigma_1(X) <= 1}``.
    """
    x = _check_dims(spec, x)
    fam = spec.family
    if fam is Family.PRODUCT:
        return max(hull_violation(f, xi) for f, xi in zip(spec.factors, x))
    if fam is Family.BINARY:
        return max(0.0, float(np.max(np.abs(x))) - 1.0)
    if fam is Family.MPSK:
        rot = np.exp(1j * 2 * np.pi * np.arange(spec.m) / spec.m)
        lhs = (rot[None, :] * x[:, None]).real
        return max(0.0, float(lhs.max()) - np.cos(np.pi / spec.m))
    if fam is Family.UNIT_SPHERE:
        return max(0.0, float(np.linalg.norm(x)) - 1.0)
    if fam in (Family.SEMI_ORTHOGONAL, Family.NONNEG_SEMI_ORTHOGONAL):
        viol = max(0.0, float(np.linalg.norm(x, 2)) - 1.0)
        if fam is Family.NONNEG_SEMI_ORTHOGONAL:
            viol = max(viol, float(-x.min()))
        return viol
    box = max(0.0, float(-x.min()), float(x.max()) - 1.0)
    if fam in (Family.UNIT_VECTOR, Family.SELECTION_VECTOR):
        k = 1 if fam is Family.UNIT_VECTOR else spec.kappa[0]
        return max(box, abs(float(x.sum()) - k))
    sizes = np.asarray(spec.column_sizes, dtype=float)
    return max(box, float(np.max(np.abs(x.sum(axis=0) - sizes))),
               float(np.max(x.sum(axis=1))) - 1.0)


def project_hull(spec, x, cfg=hp.DykstraConfig()):
    """Euclidean projection onto ``conv(V)`` (``B+`` for NonnegSemiOrthogonal)."""
    x = _check_dims(spec, x)
    fam = spec.family
    if fam is Family.PRODUCT:
        return tuple(project_hull(f, xi, cfg) for f, xi in zip(spec.factors, x))
    if fam is Family.BINARY:
        return hp.clip_box(x, -1.0, 1.0)
    if fam is Family.MPSK:
        return hp.project_mpsk_hull(x, spec.m)
    if fam is Family.UNIT_SPHERE:
        return hp.project_l2_ball(x)
    if fam is Family.SEMI_ORTHOGONAL:
        return hp.project_spectral_ball(x)
    if fam is Family.UNIT_VECTOR:
        return hp.project_simplex(x)
    if fam is Family.SELECTION_VECTOR:
        return hp.project_capped_simplex(x, spec.kappa[0])
    if fam is Family.NONNEG_SEMI_ORTHOGONAL:
        return hp.project_nonneg_spectral_ball(x, cfg)
    return hp.project_assignment_hull(x, spec.column_sizes, cfg)


# -- error bounds ---------------------------------------------------------------

def _mpsk_nu(m):
    return 2.0 if m == 3 else 1.0 / math.sin(math.pi / m)


def error_bound_constant(spec):
    """Constant ``nu`` with ``dist(x, V) <= nu * (C - ||x||^2)`` on the hull.

    For a Product the largest factor constant is used. NonnegSemiOrthogonal
    returns ``5 r^(3/4)``, the factor in front of its square-root bound; it
    has no bound linear in the deficit.
    """
    fam = spec.family
    if fam is Family.PRODUCT:
        return max(error_bound_constant(f) for f in spec.factors)
    if fam in (Family.BINARY, Family.UNIT_SPHERE, Family.SEMI_ORTHOGONAL):
        return 1.0
    if fam is Family.MPSK:
        return _mpsk_nu(spec.m)
    if fam in (Family.UNIT_VECTOR, Family.SELECTION_VECTOR):
        return 2.0
    if fam is Family.NONNEG_SEMI_ORTHOGONAL:
        return 5.0 * spec.r ** 0.75
    return 3.0 * math.sqrt(sum(spec.column_sizes))


def _require_hull(spec, x, tol):
    if not hull_contains(spec, x, tol):
        raise HullMembershipError(f"point is outside the hull of {spec}")


def error_bound_tight(spec, x, tol=DEFAULT_TOL):
    """The sharper of the two error bounds known for the family.

    ===================== ==================================================
    Binary                ``n - ||x||_1``
    MPSK                  ``nu * (n - ||x||^2)``
    UnitSphere            ``1 - ||x||``
    SemiOrthogonal        ``r - ||X||_*``
    UnitVector            ``2 (1 - max(x))``
    SelectionVector       ``2 (kappa - s_kappa(x))``
    PartialPermutation    ``3 sqrt(r) sum_j (1 - max(x_j))``
    SizeAssignment        ``3 sqrt(sum kappa) sum_j (kappa_j - s_kappa_j(x_j))``
    NonnegSemiOrthogonal  ``5 r^(3/4) sqrt(r - ||X||_F^2)``
    Product               sum of the factor bounds
    ===================== ==================================================

    ``s_k`` is the sum of the ``k`` largest entries.

    Raises
    ------
    HullMembershipError
        If ``x`` is not in the hull within ``tol``.
    """
    x = _check_dims(spec, x)
    _require_hull(spec, x, tol)
    return _tight(spec, x)


def _tight(spec, x):
    fam = spec.family
    if fam is Family.PRODUCT:
        return float(sum(_tight(f, xi) for f, xi in zip(spec.factors, x)))
    if fam is Family.BINARY:
        return float(spec.n - np.abs(x).sum())
    if fam is Family.MPSK:
        return _mpsk_nu(spec.m) * (spec.n - float(np.sum(np.abs(x) ** 2)))
    if fam is Family.UNIT_SPHERE:
        return 1.0 - float(np.linalg.norm(x))
    if fam is Family.SEMI_ORTHOGONAL:
        return spec.r - float(np.linalg.svd(x, compute_uv=False).sum())
    if fam is Family.UNIT_VECTOR:
        return 2.0 * (1.0 - float(x.max()))
    if fam is Family.SELECTION_VECTOR:
        k = spec.kappa[0]
        return 2.0 * (k - top_sum(x, k))
    if fam is Family.NONNEG_SEMI_ORTHOGONAL:
        return _sqrt_bound(spec, x)
    sizes = spec.column_sizes
    deficit = sum(k - top_sum(x[:, j], k) for j, k in enumerate(sizes))
    return error_bound_constant(spec) * deficit


def _sqrt_bound(spec, x):
    deficit = max(0.0, spec.r - float(np.sum(x * x)))
    return error_bound_constant(spec) * math.sqrt(deficit)


def error_bound_norm(spec, x, tol=DEFAULT_TOL):
    """Error bound ``nu * (C - ||x||^2)`` with ``nu`` from :func:`error_bound_constant`.

    NonnegSemiOrthogonal uses its square-root form instead. In a Product,
    NonnegSemiOrthogonal factors contribute their square-root term and the
    remaining factors share the largest of their constants.
    """
    x = _check_dims(spec, x)
    _require_hull(spec, x, tol)
    fam = spec.family
    if fam is Family.NONNEG_SEMI_ORTHOGONAL:
        return _sqrt_bound(spec, x)
    if fam is Family.PRODUCT:
        linear = [(f, xi) for f, xi in zip(spec.factors, x) if f.family is not Family.NONNEG_SEMI_ORTHOGONAL]
        roots = [(f, xi) for f, xi in zip(spec.factors, x) if f.family is Family.NONNEG_SEMI_ORTHOGONAL]
        total = sum(_sqrt_bound(f, xi) for f, xi in roots)
        if linear:
            nu = max(error_bound_constant(f) for f, _ in linear)
            total += nu * sum(modulus_sq(f) - sq_norm(f, xi) for f, xi in linear)
        return float(total)
    return error_bound_constant(spec) * (modulus_sq(spec) - sq_norm(spec, x))


def universal_bound(spec, x):
    """``sqrt(max(0, C - ||x||^2))``, an error bound for every CM set."""
    return math.sqrt(max(0.0, modulus_sq(spec) - sq_norm(spec, x)))


# -- JSON -----------------------------------------------------------------------

def spec_to_json(spec):
    out = {"family": spec.family.value}
    if spec.family is Family.PRODUCT:
        out["factors"] = [spec_to_json(f) for f in spec.factors]
        return out
    out["n"] = spec.n
    if spec.family in MATRIX_FAMILIES:
        out["r"] = spec.r
    if spec.family is Family.MPSK:
        out["m"] = spec.m
    if spec.kappa:
        out["kappa"] = list(spec.kappa)
    return out


def spec_from_json(obj):
    """Build a :class:`CMSetSpec` from its JSON dictionary.

    Raises
    ------
    InvalidSpecError
        On unknown families, missing fields or violated invariants.
    """
    if not isinstance(obj, dict) or "family" not in obj:
        raise InvalidSpecError("set must be an object with a 'family' field")
    try:
        family = Family(obj["family"])
    except ValueError:
        raise InvalidSpecError(f"unknown family {obj['family']!r}") from None
    if family is Family.PRODUCT:
        return CMSetSpec(family, factors=tuple(spec_from_json(f) for f in obj.get("factors", [])))
    if "n" not in obj:
        raise InvalidSpecError("missing 'n'")
    kappa = obj.get("kappa", ())
    if isinstance(kappa, int):
        kappa = (kappa,)
    r = obj.get("r", len(kappa) if family is Family.SIZE_ASSIGNMENT else 1)
    try:
        return CMSetSpec(family, n=int(obj["n"]), r=int(r), m=int(obj.get("m", 4)),
                         kappa=tuple(kappa))
    except (TypeError, ValueError) as exc:
        raise InvalidSpecError(str(exc)) from None


def point_to_json(spec, x):
    """Nested lists; complex MPSK entries become ``[re, im]`` pairs."""
    x = _check_dims(spec, x)
    if spec.family is Family.PRODUCT:
        return [point_to_json(f, xi) for f, xi in zip(spec.factors, x)]
    if spec.family is Family.MPSK:
        return [[float(v.real), float(v.imag)] for v in x]
    return x.tolist()


def point_from_json(spec, obj):
    if spec.family is Family.PRODUCT:
        if not isinstance(obj, list) or len(obj) != len(spec.factors):
            raise DimensionError("Product point must list one entry per factor")
        return tuple(point_from_json(f, o) for f, o in zip(spec.factors, obj))
    if spec.family is Family.MPSK:
        arr = np.asarray(obj, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DimensionError("MPSK point must be a list of [re, im] pairs")
        return _check_dims(spec, arr[:, 0] + 1j * arr[:, 1])
    return _check_dims(spec, np.asarray(obj, dtype=float))
