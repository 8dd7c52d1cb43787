"""Rank-r representations of parametric solution maps.

A surrogate is stored as a pair (coeffs, vectors): ``coeffs`` holds the
parametric coefficients (m x r, one column per term, expressed in a
parameter-space basis) and ``vectors`` the deterministic directions
(n x r). The represented coefficient matrix is ``coeffs @ vectors.T``
and the state at a parameter point p is ``vectors @ (coeffs.T @ psi(p))``.

The representation is invariant under GL_r: replacing (coeffs, vectors)
by (coeffs @ T, vectors @ inv(T).T) leaves the represented map unchanged.
Norms of represented maps are therefore always computed through r x r
Gram matrices, never by forming the full matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "LowRankTensor",
    "zero_tensor",
    "orth_columns",
    "orth_columns_metric",
    "truncated_svd",
]


@dataclass(frozen=True)
class LowRankTensor:
    """Rank-r sum of separable terms.

    Parameters
    ----------
    coeffs : ndarray of shape (m, r)
        Parametric coefficients of each term.
    vectors : ndarray of shape (n, r)
        Deterministic direction of each term.
    """

    coeffs: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        v = np.asarray(self.vectors, dtype=float)
        if c.ndim != 2 or v.ndim != 2:
            raise ValueError("coeffs and vectors must be 2-D arrays")
        if c.shape[1] != v.shape[1]:
            raise ValueError(
                f"rank mismatch: coeffs has {c.shape[1]} columns, vectors has {v.shape[1]}"
            )
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "vectors", v)

    @property
    def rank(self) -> int:
        return self.coeffs.shape[1]

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def evaluate_at(self, psi: np.ndarray) -> np.ndarray:
        """State at a parameter point given the basis values psi (shape (m,))."""
        if self.rank == 0:
            return np.zeros(self.n)
        return self.vectors @ (self.coeffs.T @ psi)

    def evaluate_many(self, psi_matrix: np.ndarray) -> np.ndarray:
        """States at many points at once; psi_matrix is (Z, m), result (Z, n)."""
        if self.rank == 0:
            return np.zeros((psi_matrix.shape[0], self.n))
        return (psi_matrix @ self.coeffs) @ self.vectors.T

    def full_matrix(self) -> np.ndarray:
        """The represented coefficient matrix, shape (m, n)."""
        return self.coeffs @ self.vectors.T

    def append_rank_one(self, coeff_col: np.ndarray, vector_col: np.ndarray) -> "LowRankTensor":
        """New tensor with one more separable term."""
        c = np.asarray(coeff_col, dtype=float).reshape(-1, 1)
        v = np.asarray(vector_col, dtype=float).reshape(-1, 1)
        if self.rank == 0:
            return LowRankTensor(c, v)
        if c.shape[0] != self.m or v.shape[0] != self.n:
            raise ValueError("appended term has inconsistent dimensions")
        return LowRankTensor(np.hstack([self.coeffs, c]), np.hstack([self.vectors, v]))

    def frobenius_norm(self) -> float:
        """Frobenius norm of the represented matrix via r x r Grams."""
        if self.rank == 0:
            return 0.0
        g = float(np.sum((self.coeffs.T @ self.coeffs) * (self.vectors.T @ self.vectors)))
        return float(np.sqrt(max(g, 0.0)))


def zero_tensor(m: int, n: int) -> LowRankTensor:
    """The rank-0 (identically zero) surrogate."""
    return LowRankTensor(np.zeros((m, 0)), np.zeros((n, 0)))


def orth_columns(x: np.ndarray):
    """Orthonormalize the columns of x.

    Returns (q, mixing) with ``x = q @ mixing`` and orthonormal q. When
    x is column-rank deficient the missing directions are completed from
    the trailing left singular vectors, so q always has full column count
    and its span contains the span of x.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected a 2-D array")
    k, r = x.shape
    if r == 0:
        return x.copy(), np.zeros((0, 0))
    if r > k:
        raise ValueError(f"cannot orthonormalize {r} columns in dimension {k}")
    u, s, vt = scipy.linalg.svd(x, full_matrices=False)
    # singular vectors of vanished singular values are already an
    # orthonormal completion of the range
    mixing = (s[:, None] * vt)
    return u, mixing


def orth_columns_metric(x: np.ndarray, chol_lower: np.ndarray):
    """Orthonormalize columns of x in the inner product <a, b> = a^T G b,
    where G = chol_lower @ chol_lower.T.

    Returns (q, mixing) with x = q @ mixing and q^T G q = I.
    """
    y = chol_lower.T @ x
    qy, mixing = orth_columns(y)
    q = scipy.linalg.solve_triangular(chol_lower.T, qy, lower=False)
    return q, mixing


def truncated_svd(matrix: np.ndarray, rank: int) -> LowRankTensor:
    """Best rank-``rank`` approximation of a coefficient matrix in the
    Frobenius norm, returned in separated form.

    Singular values are folded into the coefficient factor, so the
    vector factor has orthonormal columns.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("expected a 2-D coefficient matrix")
    if rank < 0:
        raise ValueError(f"rank must be >= 0, got {rank}")
    if rank == 0:
        return zero_tensor(matrix.shape[0], matrix.shape[1])
    rank = min(rank, min(matrix.shape))
    u, s, vt = scipy.linalg.svd(matrix, full_matrices=False)
    coeffs = u[:, :rank] * s[:rank]
    vectors = vt[:rank].T
    return LowRankTensor(coeffs, vectors)
