"""Estimator-style wrappers around the surrogate drivers.

The drivers in :mod:`nipgd.pgd` are plain functions; these classes
package them behind the familiar fit/predict surface so surrogates can
be configured, cloned and inspected like any other estimator:
``fit(problem)`` runs the greedy construction, fitted state lands in
trailing-underscore attributes, and ``predict(points)`` evaluates the
surrogate at new parameter values.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bases import StochasticBasis
from .pgd import PgdConfig, basic_pgd, improved_pgd
from .problems import ResidualCounter
from .quadrature import QuadratureRule
from .validation import check_parameter_points, check_problem

__all__ = ["BasicPGD", "ImprovedPGD"]


class _PgdEstimator(BaseEstimator):
    """Shared fit/predict plumbing; subclasses pick the driver."""

    _driver = None  # set by subclasses

    def fit(self, problem, y=None):
        """Build the surrogate for a parametric problem.

        Parameters
        ----------
        problem : ParametricProblem
            Black-box problem exposing residual and preconditioner.
        y : ignored
            Present for estimator-interface compatibility.
        """
        check_problem(problem)
        config = self._make_config()
        counter = ResidualCounter()
        results = type(self)._driver(problem, self.rule, self.basis,
                                     config=config, counter=counter)
        self.results_ = results
        self.tensor_ = results[-1].tensor
        self.rank_ = results[-1].rank
        self.residual_calls_ = counter.total
        self.n_features_in_ = problem.dim
        self._basis_ = self.basis
        return self

    def predict(self, points) -> np.ndarray:
        """Surrogate states at parameter points, shape (k, n)."""
        check_is_fitted(self, "tensor_")
        pts = check_parameter_points(points, self._basis_.dim)
        psi = np.stack([self._basis_.evaluate(p) for p in pts])
        return self.tensor_.evaluate_many(psi)

    def score_path(self):
        """(rank, residual_calls) pairs recorded during fitting."""
        check_is_fitted(self, "results_")
        return [(res.rank, res.residual_calls) for res in self.results_]


class BasicPGD(_PgdEstimator):
    """Greedy rank-one surrogate builder.

    Each fitted term is optimized by alternating coefficient/vector
    solves and then frozen; cheaper per rank than :class:`ImprovedPGD`
    but the accuracy of early terms is never revisited.
    """

    _driver = staticmethod(basic_pgd)

    def __init__(self, rule: QuadratureRule, basis: StochasticBasis,
                 max_rank: int = 5, stagnation_tol: float = 1e-2,
                 max_alt_iters: int = 10, bfgs_tol: float = 1e-10,
                 bfgs_memory: int = 20, bfgs_policy: str = "fifo",
                 outer_tol: float = 1e-8, anchor=None,
                 vector_precond: str = "anchor", coeff_precond: str = "scaled"):
        self.rule = rule
        self.basis = basis
        self.max_rank = max_rank
        self.stagnation_tol = stagnation_tol
        self.max_alt_iters = max_alt_iters
        self.bfgs_tol = bfgs_tol
        self.bfgs_memory = bfgs_memory
        self.bfgs_policy = bfgs_policy
        self.outer_tol = outer_tol
        self.anchor = anchor
        self.vector_precond = vector_precond
        self.coeff_precond = coeff_precond

    def _make_config(self) -> PgdConfig:
        return PgdConfig(
            max_rank=self.max_rank,
            basic_stagnation_tol=self.stagnation_tol,
            basic_max_alt_iters=self.max_alt_iters,
            bfgs_tol=self.bfgs_tol,
            bfgs_memory=self.bfgs_memory,
            bfgs_policy=self.bfgs_policy,
            outer_tol=self.outer_tol,
            anchor=self.anchor,
            vector_precond=self.vector_precond,
            coeff_precond=self.coeff_precond,
        )


class ImprovedPGD(_PgdEstimator):
    """Rank-adaptive surrogate builder with full block re-optimization.

    All terms are re-solved whenever the rank grows, with a per-rank
    stagnation tolerance that tightens as terms accumulate.
    """

    _driver = staticmethod(improved_pgd)

    def __init__(self, rule: QuadratureRule, basis: StochasticBasis,
                 max_rank: int = 5, max_alt_iters: int = 20,
                 stagnation_floor: float = 1e-8, bfgs_tol: float = 1e-10,
                 bfgs_memory: int = 20, bfgs_policy: str = "fifo",
                 outer_tol: float = 1e-8, anchor=None,
                 vector_precond: str = "anchor", coeff_precond: str = "scaled",
                 keep_sweep_history: bool = False):
        self.rule = rule
        self.basis = basis
        self.max_rank = max_rank
        self.max_alt_iters = max_alt_iters
        self.stagnation_floor = stagnation_floor
        self.bfgs_tol = bfgs_tol
        self.bfgs_memory = bfgs_memory
        self.bfgs_policy = bfgs_policy
        self.outer_tol = outer_tol
        self.anchor = anchor
        self.vector_precond = vector_precond
        self.coeff_precond = coeff_precond
        self.keep_sweep_history = keep_sweep_history

    def _make_config(self) -> PgdConfig:
        return PgdConfig(
            max_rank=self.max_rank,
            improved_max_alt_iters=self.max_alt_iters,
            improved_stagnation_floor=self.stagnation_floor,
            bfgs_tol=self.bfgs_tol,
            bfgs_memory=self.bfgs_memory,
            bfgs_policy=self.bfgs_policy,
            outer_tol=self.outer_tol,
            anchor=self.anchor,
            vector_precond=self.vector_precond,
            coeff_precond=self.coeff_precond,
            keep_sweep_history=self.keep_sweep_history,
        )
