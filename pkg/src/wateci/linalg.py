"""Small dense symmetric linear algebra.

Matrices here are at most ~20x20 (propensity design dimension), so plain
Cholesky and cyclic Jacobi are adequate and keep failures explicit.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, NonSquare, NotPositiveDefinite

PIVOT_RTOL = 1e-12
SYMMETRY_RTOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise NonSquare(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def cholesky(A) -> np.ndarray:
    """Lower-triangular L with A = L L^T.

    Raises NotPositiveDefinite when a pivot falls below ``1e-12 * max(diag(A))``.
    """
    A = _as_square(A)
    p = A.shape[0]
    scale = max(float(np.max(np.abs(A))), 1.0)
    if np.max(np.abs(A - A.T)) > SYMMETRY_RTOL * scale:
        raise NotPositiveDefinite("matrix is not symmetric")
    tol = PIVOT_RTOL * max(float(np.max(np.diag(A))), 0.0)
    L = np.zeros_like(A)
    for j in range(p):
        pivot = A[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > tol or pivot <= 0.0:
            raise NotPositiveDefinite(f"non-positive pivot {pivot:.3e} at column {j}")
        L[j, j] = np.sqrt(pivot)
        if j + 1 < p:
            L[j + 1 :, j] = (A[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def _cho_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    p = L.shape[0]
    y = np.array(b, dtype=float, copy=True)
    for i in range(p):
        y[i] = (y[i] - L[i, :i] @ y[:i]) / L[i, i]
    for i in range(p - 1, -1, -1):
        y[i] = (y[i] - L[i + 1 :, i] @ y[i + 1 :]) / L[i, i]
    return y


def solve_spd(A, b) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive-definite ``A``.

    ``b`` may be a vector or a matrix of right-hand sides (one per column).
    """
    A = _as_square(A)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"A is {A.shape}, b has leading dimension {b.shape[0]}")
    L = cholesky(A)
    if b.ndim == 1:
        return _cho_solve(L, b)
    return np.column_stack([_cho_solve(L, b[:, k]) for k in range(b.shape[1])])


def whiten(A, M) -> np.ndarray:
    """``L^{-1} M L^{-T}`` with ``A = L L^T``; same spectrum as ``A^{-1} M``."""
    A = _as_square(A)
    M = _as_square(M)
    if M.shape != A.shape:
        raise DimensionMismatch(f"A is {A.shape}, M is {M.shape}")
    L = cholesky(A)
    p = L.shape[0]

    def forward(B):
        Y = np.array(B, dtype=float, copy=True)
        for i in range(p):
            Y[i] = (Y[i] - L[i, :i] @ Y[:i]) / L[i, i]
        return Y

    return forward(forward(M).T).T


def quadratic_form(u, solved) -> float:
    """Return ``u^T (A^{-1} v)`` given ``solved = solve_spd(A, v)``."""
    u = np.asarray(u, dtype=float)
    solved = np.asarray(solved, dtype=float)
    if u.shape != solved.shape or u.ndim != 1:
        raise DimensionMismatch(f"length mismatch: {u.shape} vs {solved.shape}")
    return float(u @ solved)


def inv_quadratic(A, u, v=None) -> float:
    """Convenience: ``u^T A^{-1} v`` (``v`` defaults to ``u``)."""
    v = u if v is None else v
    return quadratic_form(u, solve_spd(A, v))


def jacobi_eigenvalues(A) -> np.ndarray:
    """Eigenvalues of the symmetric part of ``A`` by cyclic Jacobi rotations."""
    A = _as_square(A)
    S = 0.5 * (A + A.T)
    p = S.shape[0]
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.triu(S, 1) ** 2) * 2.0)
        if off < JACOBI_TOL:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                if S[i, j] == 0.0:
                    continue
                theta = (S[j, j] - S[i, i]) / (2.0 * S[i, j])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                R = np.eye(p)
                R[i, i] = R[j, j] = c
                R[i, j] = s
                R[j, i] = -s
                S = R.T @ S @ R
                S[i, j] = S[j, i] = 0.0
    return np.sort(np.diag(S))


def min_eig_sym(A) -> float:
    """Smallest eigenvalue of ``(A + A^T) / 2``."""
    return float(jacobi_eigenvalues(A)[0])
