"""Finite-dimensional function bases on the parameter domain.

Two families are provided: total-degree orthonormalized Legendre
polynomials (for smooth parameter dependence) and piecewise linear hat
functions on a uniform mesh (for solutions with limited parametric
regularity). Both expose the same small surface: a dimension ``m``, a
parameter dimension ``dim``, pointwise evaluation, and a flag telling
whether the family is orthonormal for the uniform probability measure.
"""

from __future__ import annotations

from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from .quadrature import QuadratureRule

__all__ = [
    "StochasticBasis",
    "LegendreBasis",
    "PiecewiseLinearBasis",
    "legendre_total_degree",
    "piecewise_linear_basis",
    "eval_matrix",
    "gram",
    "DegenerateRuleError",
]


class DegenerateRuleError(ValueError):
    """Raised when a quadrature rule cannot resolve a basis (singular Gram)."""


class StochasticBasis:
    """Base class for parameter-space bases.

    Subclasses set ``m`` (number of functions), ``dim`` (parameter
    dimension), ``orthonormal`` (w.r.t. the uniform probability measure
    of the domain) and implement ``evaluate``.
    """

    m: int
    dim: int
    orthonormal: bool

    def evaluate(self, p) -> np.ndarray:
        """Values of all m basis functions at one point, shape (m,)."""
        raise NotImplementedError


def _total_degree_indices(dim: int, degree: int):
    """Multi-indices of total degree <= degree, graded lexicographic,
    constant term first."""
    indices = []
    for g in range(degree + 1):
        block = []
        for combo in combinations_with_replacement(range(dim), g):
            alpha = [0] * dim
            for coord in combo:
                alpha[coord] += 1
            block.append(tuple(alpha))
        block.sort()
        indices.extend(block)
    return indices


def _legendre_orthonormal_1d(max_degree: int, t: np.ndarray) -> np.ndarray:
    """Values of sqrt(2n+1) P_n(t) for n = 0..max_degree; shape (len(t), max_degree+1).

    Orthonormal for the uniform probability measure on [-1, 1].
    """
    t = np.asarray(t, dtype=float)
    vals = np.empty((t.shape[0], max_degree + 1))
    vals[:, 0] = 1.0
    if max_degree >= 1:
        vals[:, 1] = t
    p_prev = np.ones_like(t)
    p = t.copy()
    for n in range(1, max_degree):
        p_next = ((2 * n + 1) * t * p - n * p_prev) / (n + 1)
        vals[:, n + 1] = p_next
        p_prev, p = p, p_next
    scale = np.sqrt(2.0 * np.arange(max_degree + 1) + 1.0)
    return vals * scale


class LegendreBasis(StochasticBasis):
    """Orthonormalized Legendre polynomials of bounded total degree on [-1,1]^dim."""

    def __init__(self, dim: int, degree: int):
        if dim < 1:
            raise ValueError(f"parameter dimension must be >= 1, got {dim}")
        if degree < 0:
            raise ValueError(f"total degree must be >= 0, got {degree}")
        self.dim = int(dim)
        self.degree = int(degree)
        self.indices = _total_degree_indices(self.dim, self.degree)
        self.m = len(self.indices)
        self.orthonormal = True

    def evaluate(self, p) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.shape != (self.dim,):
            raise ValueError(f"expected point of dimension {self.dim}, got shape {p.shape}")
        # per-coordinate 1-D values up to the max degree, then products
        vals_1d = [_legendre_orthonormal_1d(self.degree, p[k:k + 1])[0] for k in range(self.dim)]
        out = np.empty(self.m)
        for j, alpha in enumerate(self.indices):
            prod = 1.0
            for k, n in enumerate(alpha):
                prod *= vals_1d[k][n]
            out[j] = prod
        return out


class PiecewiseLinearBasis(StochasticBasis):
    """Hat functions on a uniform mesh of an interval (m = n_elements + 1).

    A partition of unity; not orthonormal.
    """

    def __init__(self, n_elements: int, interval: Sequence[float] = (0.0, 1.0)):
        if n_elements < 1:
            raise ValueError(f"need at least one element, got {n_elements}")
        a, b = float(interval[0]), float(interval[1])
        if not b > a:
            raise ValueError(f"empty interval [{a}, {b}]")
        self.n_elements = int(n_elements)
        self.interval = (a, b)
        self.nodes = np.linspace(a, b, self.n_elements + 1)
        self.dim = 1
        self.m = self.n_elements + 1
        self.orthonormal = False

    def evaluate(self, p) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.shape != (1,):
            raise ValueError(f"expected a scalar parameter point, got shape {p.shape}")
        a, b = self.interval
        t = float(p[0])
        if t < a - 1e-12 or t > b + 1e-12:
            raise ValueError(f"point {t} outside basis interval [{a}, {b}]")
        t = min(max(t, a), b)
        h = (b - a) / self.n_elements
        e = min(int((t - a) / h), self.n_elements - 1)
        local = (t - self.nodes[e]) / h
        out = np.zeros(self.m)
        out[e] = 1.0 - local
        out[e + 1] = local
        return out


def legendre_total_degree(dim: int, degree: int) -> LegendreBasis:
    """Orthonormal Legendre basis of total degree ``degree`` on [-1,1]^dim."""
    return LegendreBasis(dim, degree)


def piecewise_linear_basis(n_elements: int, interval: Sequence[float] = (0.0, 1.0)) -> PiecewiseLinearBasis:
    """Hat-function basis on a uniform mesh of ``interval``."""
    return PiecewiseLinearBasis(n_elements, interval)


def eval_matrix(basis: StochasticBasis, rule: QuadratureRule) -> np.ndarray:
    """Basis values at every quadrature node: Psi[z, j] = psi_j(p_z)."""
    if rule.dim != basis.dim:
        raise ValueError(f"rule dimension {rule.dim} != basis dimension {basis.dim}")
    psi = np.empty((rule.n_points, basis.m))
    for z in range(rule.n_points):
        psi[z] = basis.evaluate(rule.points[z])
    return psi


def gram(basis: StochasticBasis, rule: QuadratureRule) -> np.ndarray:
    """Quadrature Gram matrix Psi^T W Psi of the basis under the rule.

    Raises DegenerateRuleError if the rule cannot distinguish the basis
    functions (Gram not positive definite).
    """
    psi = eval_matrix(basis, rule)
    g = psi.T @ (rule.weights[:, None] * psi)
    g = 0.5 * (g + g.T)
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise DegenerateRuleError(
            f"rule with {rule.n_points} points yields a singular Gram for m={basis.m}"
        ) from None
    return g
