"""The black-box contract between solvers and parametric problems.

Solvers in this package touch a problem through exactly two callables:
the residual ``R(u; p)`` (right-hand side minus operator, an ascent
direction of the underlying energy) and the action of an approximate
inverse Jacobian ``precond_apply``. Nothing else about the model is
assumed, which is what makes the surrogate construction non-intrusive:
an existing simulation code can be wrapped without exposing matrices.

Problems may additionally expose ``precond_matvec`` (the forward action
of the preconditioning operator). It is optional; solvers fall back to
inverse-only constructions when it is absent.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

__all__ = ["ParametricProblem", "ResidualCounter", "counted", "CountingProblem"]


class ParametricProblem(ABC):
    """Abstract parametric nonlinear problem R(u; p) = 0.

    Attributes
    ----------
    n : int
        Dimension of the state space.
    dim : int
        Dimension of the parameter domain.
    domain : tuple of (low, high) pairs
        Bounds of the parameter box, one pair per coordinate.
    reentrant : bool
        Whether ``residual`` may be called concurrently.
    """

    n: int
    dim: int
    domain: tuple
    reentrant: bool = True

    @abstractmethod
    def residual(self, u: np.ndarray, p: np.ndarray) -> np.ndarray:
        """R(u; p) = b(p) - A(u; p), shape (n,)."""

    @abstractmethod
    def precond_apply(self, vec: np.ndarray, p: np.ndarray, u_state: np.ndarray) -> np.ndarray:
        """Action of the approximate inverse Jacobian at (u_state, p) on vec.

        Must be linear in ``vec`` for fixed (p, u_state).
        """

    def anchor_point(self) -> np.ndarray:
        """Midpoint of the parameter box."""
        lows = np.array([a for a, _ in self.domain], dtype=float)
        highs = np.array([b for _, b in self.domain], dtype=float)
        return 0.5 * (lows + highs)


class ResidualCounter:
    """Monotone counter of residual evaluations, with per-label breakdown.

    The count is never reset implicitly; cost comparisons across
    algorithms rely on it being cumulative.
    """

    def __init__(self):
        self.total = 0
        self.by_label = {}

    def add(self, label: str = "residual"):
        self.total += 1
        self.by_label[label] = self.by_label.get(label, 0) + 1

    def __repr__(self):
        return f"ResidualCounter(total={self.total}, by_label={self.by_label})"


class CountingProblem(ParametricProblem):
    """Transparent wrapper that counts residual evaluations.

    Preconditioner applications are deliberately not counted: the cost
    model of interest is the number of black-box residual calls.
    """

    def __init__(self, problem: ParametricProblem, counter: ResidualCounter,
                 label: str = "residual"):
        self.inner = problem
        self.counter = counter
        self.label = label
        self.n = problem.n
        self.dim = problem.dim
        self.domain = problem.domain
        self.reentrant = problem.reentrant

    def residual(self, u, p):
        self.counter.add(self.label)
        return self.inner.residual(u, p)

    def precond_apply(self, vec, p, u_state):
        return self.inner.precond_apply(vec, p, u_state)

    def __getattr__(self, name):
        # anything else (precond_matvec when present, problem-specific
        # helpers) passes through untouched and uncounted
        return getattr(self.inner, name)


def counted(problem: ParametricProblem, counter: ResidualCounter,
            label: str = "residual") -> CountingProblem:
    """Wrap ``problem`` so every residual call increments ``counter``."""
    return CountingProblem(problem, counter, label)
