"""Dense symmetric linear algebra for Newton systems.

Matrices are plain ``numpy`` arrays. :func:`symmetric` returns an exactly
symmetric copy, which every other routine here works from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatchError, NotPositiveDefiniteError, NotSymmetricError

# Elementwise asymmetry tolerated before a matrix is rejected.
SYMMETRY_TOL = 1e-12


def symmetric(A, atol: float = SYMMETRY_TOL) -> np.ndarray:
    """Return an exactly symmetric float copy of ``A``.

    Raises NotSymmetricError if ``A`` is not square or if an off-diagonal pair
    differs by more than ``atol * max(1, max|A|)``.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > atol * scale:
        raise NotSymmetricError("matrix is not symmetric")
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class SpdFactorization:
    """Lower-triangular Cholesky factor with ``A = lower @ lower.T``."""

    lower: np.ndarray

    @property
    def order(self) -> int:
        return self.lower.shape[0]

    def solve(self, b) -> np.ndarray:
        return solve_spd(self, b)

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


def _failing_minor(A: np.ndarray) -> int:
    # Plain column Cholesky, only run after LAPACK has already refused A.
    n = A.shape[0]
    L = np.zeros_like(A)
    for j in range(n):
        pivot = A[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > 0.0:
            return j + 1
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return n


def factor_spd(A) -> SpdFactorization:
    """Cholesky-factor a symmetric positive definite matrix, without pivoting.

    Raises
    ------
    NotPositiveDefiniteError
        If a pivot is not strictly positive. ``err.order`` is the 1-based
        order of the first leading minor that fails.
    """
    A = symmetric(A)
    if not np.all(np.isfinite(A)):
        raise NotPositiveDefiniteError(1)
    try:
        lower = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(_failing_minor(A)) from None
    if not np.all(np.isfinite(lower)) or np.any(np.diag(lower) <= 0.0):
        raise NotPositiveDefiniteError(_failing_minor(A))
    return SpdFactorization(lower)


def solve_spd(F: SpdFactorization, b) -> np.ndarray:
    """Solve ``A x = b`` given the factorization of ``A``."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.shape[0] != F.order:
        raise DimensionMismatchError(f"rhs has shape {b.shape}, matrix has order {F.order}")
    y = solve_triangular(F.lower, b, lower=True, check_finite=False)
    return solve_triangular(F.lower, y, lower=True, trans="T", check_finite=False)


def extreme_eigenvalues(A) -> tuple[float, float]:
    """Smallest and largest eigenvalues of a symmetric matrix."""
    w = np.linalg.eigvalsh(symmetric(A))
    return float(w[0]), float(w[-1])
