"""Non-intrusive low-rank approximation of parametric nonlinear equations.

Build separable surrogates u(p) ~ sum_i coeff_i(p) vector_i of the
solution map of a parametric problem R(u; p) = 0, using nothing but
residual evaluations at quadrature points and the action of a
preconditioner. Includes greedy and rank-adaptive constructions,
reference solvers for judging them, and two benchmark problems.
"""

from .bases import (
    DegenerateRuleError,
    LegendreBasis,
    PiecewiseLinearBasis,
    StochasticBasis,
    eval_matrix,
    gram,
    legendre_total_degree,
    piecewise_linear_basis,
)
from .benchmarks import ElectronicNetwork, ObstacleProblem, obstacle_profile
from .estimators import BasicPGD, ImprovedPGD
from .exceptions import (
    ConvergenceError,
    DegeneratePreconditionerError,
    NonFiniteResidualError,
)
from .lowrank import LowRankTensor, orth_columns, orth_columns_metric, truncated_svd, zero_tensor
from .pgd import (
    PgdConfig,
    RankResult,
    basic_pgd,
    improved_pgd,
    make_coeff_preconditioner,
    make_vector_preconditioner,
    projected_residual_coeffs,
    projected_residual_vectors,
    residual_samples,
)
from .problems import CountingProblem, ParametricProblem, ResidualCounter, counted
from .quadrature import (
    QuadratureRule,
    gauss_legendre_1d,
    integrate,
    piecewise_gauss_1d,
    tensorize,
    trapezoid_1d,
)
from .reference import (
    deterministic_solve,
    full_galerkin,
    l2_projection,
    relative_error,
    svd_baseline,
)

__version__ = "0.1.0"

__all__ = [
    "QuadratureRule", "gauss_legendre_1d", "piecewise_gauss_1d", "trapezoid_1d",
    "tensorize", "integrate",
    "StochasticBasis", "LegendreBasis", "PiecewiseLinearBasis",
    "legendre_total_degree", "piecewise_linear_basis", "eval_matrix", "gram",
    "DegenerateRuleError",
    "LowRankTensor", "zero_tensor", "orth_columns", "orth_columns_metric",
    "truncated_svd",
    "ParametricProblem", "ResidualCounter", "CountingProblem", "counted",
    "PgdConfig", "RankResult", "basic_pgd", "improved_pgd",
    "residual_samples", "projected_residual_vectors", "projected_residual_coeffs",
    "make_vector_preconditioner", "make_coeff_preconditioner",
    "deterministic_solve", "l2_projection", "full_galerkin", "relative_error",
    "svd_baseline",
    "ElectronicNetwork", "ObstacleProblem", "obstacle_profile",
    "BasicPGD", "ImprovedPGD",
    "ConvergenceError", "NonFiniteResidualError", "DegeneratePreconditionerError",
    "__version__",
]
