"""Small dense linear-algebra helpers."""

import numpy as np


def estimate_spectral_norm(operator, max_iter=1000, tol=1e-14):
    """Largest singular value of ``operator`` by power iteration on ``M^T M``.

    The start vector is fixed (a ramp from 1 to 2), so repeated calls give
    identical results. A zero matrix returns 0.
    """
    M = np.atleast_2d(np.asarray(operator, dtype=float))
    if not np.any(M):
        return 0.0
    ncols = M.shape[1]
    starts = [np.linspace(1.0, 2.0, ncols)] + list(np.eye(ncols))
    for v in starts:
        v = v / np.linalg.norm(v)
        if np.linalg.norm(M @ v) > 0:
            break
    sigma = np.linalg.norm(M @ v)
    for _ in range(max_iter):
        u = M.T @ (M @ v)
        v = u / np.linalg.norm(u)
        new = np.linalg.norm(M @ v)
        if abs(new - sigma) <= tol * new:
            sigma = new
            break
        sigma = new
    return float(sigma)
