"""Small linear-algebra kernels shared by the solvers."""
from __future__ import annotations

import numpy as np

from .exceptions import SolverDiverged


def jacobi_cg(A, b, tol=1e-10, max_iter=None, x0=None):
    """Jacobi-preconditioned conjugate gradients for SPD ``A``.

    Stops once ``||D^-1 (b - A x)||_2 <= tol`` with ``D = diag(A)``; for a graph
    Laplacian block that quantity is the vector of harmonic residuals.

    Returns ``(x, scaled_residual_norm, iterations)``.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if n == 0:
        return np.zeros(0), 0.0, 0
    d = np.asarray(A.diagonal(), dtype=float)
    if np.any(d <= 0):
        raise SolverDiverged("matrix has a non-positive diagonal entry")
    inv_d = 1.0 / d
    max_iter = 10 * n if max_iter is None else int(max_iter)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = inv_d * r
    res = float(np.linalg.norm(z))
    if res <= tol:
        return x, res, 0
    p = z.copy()
    rz = float(np.dot(r, z))
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = float(np.dot(p, Ap))
        if not pAp > 0:
            raise SolverDiverged(f"lost positive definiteness at iteration {it}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = inv_d * r
        res = float(np.linalg.norm(z))
        if res <= tol:
            # recompute from scratch so the reported residual is honest
            z = inv_d * (b - A @ x)
            res = float(np.linalg.norm(z))
            if res <= tol:
                return x, res, it
            r = b - A @ x
        rz_new = float(np.dot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverDiverged(f"CG did not reach {tol:g} in {max_iter} iterations (at {res:.3e})")


def dense_spd_solve(A, b):
    """Cholesky solve; falls back to LU if the factorisation breaks down."""
    from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve

    M = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)
    try:
        return cho_solve(cho_factor(M), b)
    except LinAlgError:
        return solve(M, b)
