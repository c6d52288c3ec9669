"""Euclidean projections onto the convex hulls of constant-modulus sets.

Every projector here is a pure function of its inputs. Vector projectors
accept 1-D arrays, matrix projectors accept 2-D arrays, and the MPSK
projector works element-wise on complex arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DykstraConfig",
    "DykstraError",
    "clip_box",
    "project_simplex",
    "project_capped_simplex",
    "project_l2_ball",
    "project_spectral_ball",
    "project_mpsk_hull",
    "project_row_cap",
    "dykstra",
    "project_assignment_hull",
    "project_nonneg_spectral_ball",
    "deterministic_svd",
]


@dataclass(frozen=True)
class DykstraConfig:
    """Stopping rule for :func:`dykstra`.

    Attributes
    ----------
    max_iter : int
        Maximum number of Dykstra rounds.
    tol : float
        Threshold on the Frobenius norm of the change between two
        consecutive rounds.
    """

    max_iter: int = 5000
    tol: float = 1e-10

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


class DykstraError(RuntimeError):
    """Dykstra's method hit ``max_iter`` before the change dropped below ``tol``."""

    def __init__(self, message, iterate, residual):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


def clip_box(z, a, b):
    """Component-wise ``min(max(z, a), b)``; raises if ``a > b`` anywhere."""
    z = np.asarray(z, dtype=float)
    a = np.broadcast_to(np.asarray(a, dtype=float), z.shape)
    b = np.broadcast_to(np.asarray(b, dtype=float), z.shape)
    if np.any(a > b):
        raise ValueError("lower bound exceeds upper bound")
    return np.minimum(np.maximum(z, a), b)


def project_simplex(z):
    """Project onto the unit simplex ``{x >= 0, sum(x) = 1}`` by sort-and-threshold.

    Runs in O(n log n).
    """
    z = np.asarray(z, dtype=float)
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, z.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(z - theta, 0.0)


def _capped_rows(Z, kappa, eps=1e-10, max_iter=200):
    """Row-wise capped-simplex projection of a 2-D array (``kappa`` per row).

    Bisection on the shift ``tau`` over ``[min(z) - 1, max(z)]``. At every
    step the saturation pattern at the midpoint gives a candidate shift in
    closed form; a row is finished as soon as that candidate reproduces its
    own pattern (an exact root) or the clipped sum is within ``eps``.
    """
    Z = np.asarray(Z, dtype=float)
    kappa = np.broadcast_to(np.asarray(kappa, dtype=float), (Z.shape[0],))
    lo = Z.min(axis=1) - 1.0
    hi = Z.max(axis=1).copy()
    tau = 0.5 * (lo + hi)
    active = np.ones(Z.shape[0], dtype=bool)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        shifted = Z - mid[:, None]
        ones = shifted >= 1.0
        free = (shifted > 0.0) & ~ones
        nfree = free.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cand = ((Z * free).sum(axis=1) + ones.sum(axis=1) - kappa) / nfree
        cs = Z - cand[:, None]
        exact = ((nfree > 0)
                 & np.all((cs >= 1.0) == ones, axis=1)
                 & np.all(((cs > 0.0) & (cs < 1.0)) == free, axis=1))
        s = np.clip(shifted, 0.0, 1.0).sum(axis=1)
        close = np.abs(s - kappa) <= eps
        done_exact = active & exact
        tau[done_exact] = cand[done_exact]
        done_close = active & close & ~exact
        tau[done_close] = mid[done_close]
        active &= ~(exact | close)
        if not active.any():
            break
        tau[active] = mid[active]
        above = s > kappa
        lo = np.where(active & above, mid, lo)
        hi = np.where(active & ~above, mid, hi)
    return np.clip(Z - tau[:, None], 0.0, 1.0)


def project_capped_simplex(z, kappa, eps=1e-10, max_iter=200):
    """Project onto the capped simplex ``{x in [0,1]^n : sum(x) = kappa}``.

    The projection is ``clip(z - tau, 0, 1)`` with ``tau`` found by bisection
    on ``[min(z) - 1, max(z)]``; once the bracket isolates which entries sit
    at 0, in between, or at 1, the shift is solved for exactly.

    Parameters
    ----------
    z : array_like, shape (n,)
    kappa : int
        Target sum, ``1 <= kappa <= n``.
    eps : float
        Bisection also stops once ``|sum(x) - kappa| <= eps``.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    if not 1 <= kappa <= n:
        raise ValueError(f"kappa={kappa} outside [1, {n}]")
    return _capped_rows(z[None, :], kappa, eps, max_iter)[0]


def project_l2_ball(z):
    """Radial projection onto the unit Euclidean ball (any array shape)."""
    z = np.asarray(z, dtype=float)
    nrm = np.linalg.norm(z)
    if nrm > 1.0:
        return z / nrm
    return z.copy()


def deterministic_svd(Z):
    """Thin SVD with a fixed sign convention.

    The first non-negligible entry of each left singular vector is made
    non-negative; the matching right singular vector is flipped with it.
    """
    Z = np.asarray(Z, dtype=float)
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    for i in range(s.size):
        col = U[:, i]
        nz = np.flatnonzero(np.abs(col) > 1e-14)
        if nz.size and col[nz[0]] < 0:
            U[:, i] = -col
            Vt[i, :] = -Vt[i, :]
    return U, s, Vt


def project_spectral_ball(Z):
    """Project onto ``{X : sigma_1(X) <= 1}`` by clipping singular values to [0, 1]."""
    Z = np.asarray(Z, dtype=float)
    U, s, Vt = deterministic_svd(Z)
    if s.size == 0 or s[0] <= 1.0:
        return Z.copy()
    return (U * np.minimum(s, 1.0)) @ Vt


def project_mpsk_hull(z, m):
    """Project complex values onto the regular m-gon spanned by the MPSK points.

    Each entry is rotated into its sector ``k = floor((angle + pi/m) / (2 pi/m))``,
    the real part is clipped to ``[0, cos(pi/m)]`` and the imaginary part to
    ``[-sin(pi/m), sin(pi/m)]``, and the result is rotated back.
    """
    if m < 3:
        raise ValueError("MPSK order must be at least 3")
    z = np.asarray(z, dtype=complex)
    half = np.pi / m
    k = np.floor((np.angle(z) + half) / (2.0 * half))
    rot = np.exp(1j * 2.0 * half * k)
    y = z / rot
    x = np.clip(y.real, 0.0, np.cos(half)) + 1j * np.clip(y.imag, -np.sin(half), np.sin(half))
    return x * rot


def project_row_cap(z):
    """Project onto ``{x in [0,1]^r : sum(x) <= 1}``."""
    return _row_cap_rows(np.asarray(z, dtype=float)[None, :])[0]


def _row_cap_rows(Z):
    X = np.clip(Z, 0.0, 1.0)
    over = X.sum(axis=1) > 1.0
    if over.any():
        X[over] = _capped_rows(Z[over], 1.0)
    return X


def dykstra(project_a: Callable, project_b: Callable, Z, cfg: DykstraConfig = DykstraConfig()):
    """Project ``Z`` onto the intersection of two closed convex sets.

    Dykstra's alternating projections with correction terms. Returns the
    iterate produced by ``project_b`` once two consecutive rounds differ by
    less than ``cfg.tol`` (Frobenius norm, summed over both half-steps).

    Raises
    ------
    DykstraError
        If ``cfg.max_iter`` rounds pass without meeting the tolerance. The
        exception carries the last iterate and the last change.
    """
    x = np.asarray(Z, dtype=float).copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    y_prev = x.copy()
    change = np.inf
    for _ in range(cfg.max_iter):
        y = project_a(x + p)
        p = x + p - y
        x_new = project_b(y + q)
        q = y + q - x_new
        change = np.linalg.norm(x_new - x) + np.linalg.norm(y - y_prev)
        x, y_prev = x_new, y
        if change < cfg.tol:
            return x
    raise DykstraError(
        f"Dykstra did not converge in {cfg.max_iter} rounds (change {change:.3e})",
        iterate=x,
        residual=change,
    )


def project_assignment_hull(Z, kappa, cfg: DykstraConfig = DykstraConfig()):
    """Project onto ``{X in [0,1]^{n x r} : X^T 1 = kappa, X 1 <= 1}``.

    Dykstra between the column constraints (a capped simplex per column) and
    the row constraints (a capped row sum per row). With ``kappa = 1`` this is
    the partial-permutation hull; square with ``kappa = 1`` gives the
    doubly stochastic matrices.
    """
    Z = np.asarray(Z, dtype=float)
    kappa = np.broadcast_to(np.asarray(kappa, dtype=int), (Z.shape[1],))

    if np.any(kappa < 1) or np.any(kappa > Z.shape[0]):
        raise ValueError("column sizes must lie in [1, n]")

    def columns(X):
        return _capped_rows(X.T, kappa).T

    def rows(X):
        return _row_cap_rows(X)

    return dykstra(columns, rows, Z, cfg)


def project_nonneg_spectral_ball(Z, cfg: DykstraConfig = DykstraConfig()):
    """Project onto ``{X >= 0 : sigma_1(X) <= 1}`` via Dykstra."""
    return dykstra(project_spectral_ball, lambda X: np.maximum(X, 0.0),
                   np.asarray(Z, dtype=float), cfg)
