"""Reference solutions and error metrics for judging surrogates.

Everything here is a baseline: per-point deterministic solves, the
quadrature projection of those solves onto the parametric basis, the
unconstrained (full-rank) coefficient solve, and optimal low-rank
truncations of a coefficient matrix. Surrogates built by the drivers
in :mod:`nipgd.pgd` are always measured against one of these.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from . import lbfgs
from .bases import StochasticBasis, eval_matrix, gram
from .exceptions import ConvergenceError
from .lowrank import LowRankTensor, truncated_svd
from .problems import ParametricProblem
from .quadrature import QuadratureRule

__all__ = [
    "deterministic_solve",
    "l2_projection",
    "full_galerkin",
    "relative_error",
    "svd_baseline",
]


def deterministic_solve(problem: ParametricProblem, p, x0=None,
                        tol: float = 1e-12, max_iter: int = 500,
                        memory: int = 20) -> np.ndarray:
    """Solve R(u; p) = 0 for one fixed parameter value.

    A preconditioned iteration damped by the coarse line search; with
    ``memory`` > 0 the steps are accelerated by the same limited-memory
    rank-two corrections the surrogate solvers use (memory = 0 gives
    the plain damped fixed point, which can be very slow when the
    preconditioner underestimates the curvature). ``tol`` is an
    absolute bound on the residual norm. Raises ConvergenceError if the
    budget is exhausted.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if x0 is None:
        x0 = np.zeros(problem.n)
    x0 = np.asarray(x0, dtype=float)
    norm0 = float(np.linalg.norm(problem.residual(x0, p)))
    c0 = lambda vec: problem.precond_apply(vec, p, x0)
    result = lbfgs.solve(lambda u: problem.residual(u, p), x0, c0,
                         tol=tol / max(1.0, norm0), max_iter=max_iter,
                         memory=memory)
    if not result.converged:
        raise ConvergenceError(
            f"deterministic solve at p={p} stalled at |R|={result.residual_norm:.3e} "
            f"after {result.iterations} iterations",
            residual_norm=result.residual_norm, iterations=result.iterations)
    return result.x


def l2_projection(problem: ParametricProblem, rule: QuadratureRule,
                  basis: StochasticBasis, tol: float = 1e-12,
                  max_iter: int = 500, memory: int = 20) -> np.ndarray:
    """Projection of the exact solution map onto the basis, shape (m, n).

    Solves the problem independently at every quadrature point, then
    projects: coefficients = G^{-1} Psi^T W [u(p_z)]. This is the best
    approximation in the induced L2 sense and serves as the reference
    surrogate when per-point solves are affordable.
    """
    psi = eval_matrix(basis, rule)
    g = gram(basis, rule)
    states = np.empty((rule.n_points, problem.n))
    for z in range(rule.n_points):
        states[z] = deterministic_solve(problem, rule.points[z], tol=tol,
                                        max_iter=max_iter, memory=memory)
    rhs = psi.T @ (rule.weights[:, None] * states)
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(g), rhs)


def full_galerkin(problem: ParametricProblem, rule: QuadratureRule,
                  basis: StochasticBasis, tol: float = 1e-10,
                  max_iter: int = 2000, memory: int = 30,
                  anchor=None) -> np.ndarray:
    """Unconstrained coefficient solve, shape (m, n).

    Finds the stationary coefficient matrix of the quadrature-projected
    energy over the whole tensor space (no rank constraint); its error
    against per-point solves is the approximation floor any low-rank
    surrogate on the same basis and rule can at best reach. Solved
    matrix-free with the limited-memory solver; the initial operator
    applies the problem preconditioner, frozen at the anchor parameter,
    to each basis row of the block residual.
    """
    psi = eval_matrix(basis, rule)
    gram(basis, rule)  # reject degenerate rule/basis pairings early
    w = rule.weights
    if anchor is None:
        anchor = problem.anchor_point()
    anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
    u0 = np.zeros((basis.m, problem.n))
    anchor_state = np.zeros(problem.n)

    def residual_fn(coeff_matrix):
        states = psi @ coeff_matrix
        out = np.empty((rule.n_points, problem.n))
        for z in range(rule.n_points):
            out[z] = problem.residual(states[z], rule.points[z])
        return psi.T @ (w[:, None] * out)

    def c0(block):
        out = np.empty_like(block)
        for i in range(block.shape[0]):
            out[i] = problem.precond_apply(block[i], anchor, anchor_state)
        return out

    result = lbfgs.solve(residual_fn, u0, c0, tol=tol, max_iter=max_iter,
                         memory=memory)
    if not result.converged:
        raise ConvergenceError(
            f"coefficient solve stalled at |R|={result.residual_norm:.3e}",
            residual_norm=result.residual_norm, iterations=result.iterations)
    return result.x


def relative_error(approx_eval: Callable, ref_eval: Callable,
                   error_rule: QuadratureRule) -> float:
    """Quadrature relative L2 distance between two parametric maps.

    sqrt( sum_z w_z |approx(p_z) - ref(p_z)|^2 / sum_z w_z |ref(p_z)|^2 ),
    with both maps evaluated pointwise at the nodes of ``error_rule``.
    """
    num = 0.0
    den = 0.0
    for z in range(error_rule.n_points):
        p = error_rule.points[z]
        a = np.asarray(approx_eval(p), dtype=float)
        r = np.asarray(ref_eval(p), dtype=float)
        wz = error_rule.weights[z]
        num += wz * float(np.sum((a - r) ** 2))
        den += wz * float(np.sum(r**2))
    if den == 0.0:
        raise ValueError("reference map is identically zero on the error rule")
    return float(np.sqrt(num / den))


def svd_baseline(coeff_matrix: np.ndarray, ranks: Sequence[int],
                 gram_matrix: Optional[np.ndarray] = None) -> list:
    """Optimal fixed-rank truncations of a coefficient matrix.

    With an orthonormal basis the plain truncated SVD is L2-optimal.
    For a non-orthonormal basis pass its Gram matrix: coefficients are
    transformed by the Cholesky factor, truncated, and transformed
    back, which makes the truncation optimal in the function-space
    norm rather than the raw coefficient norm.
    """
    coeff_matrix = np.asarray(coeff_matrix, dtype=float)
    out = []
    if gram_matrix is None:
        for r in ranks:
            out.append(truncated_svd(coeff_matrix, r))
        return out
    chol = np.linalg.cholesky(np.asarray(gram_matrix, dtype=float))
    transformed = chol.T @ coeff_matrix
    for r in ranks:
        t = truncated_svd(transformed, r)
        coeffs = scipy.linalg.solve_triangular(chol.T, t.coeffs, lower=False)
        out.append(LowRankTensor(coeffs, t.vectors))
    return out
