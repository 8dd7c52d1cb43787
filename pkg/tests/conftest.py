"""Shared synthetic problems for the test suite.

Both problems are deliberately tiny and linear so that exact solution
maps are available in closed form; the benchmark nonlinearities get
their own tests.
"""

import numpy as np
import pytest
from scipy.linalg import cho_factor, cho_solve

from nipgd.problems import ParametricProblem


def spd_matrix(n, seed=0, shift=None):
    """Random well-conditioned SPD matrix."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    if shift is None:
        shift = float(n)
    return a @ a.T + shift * np.eye(n)


class SeparableLinearProblem(ParametricProblem):
    """A u = (1 + p/2) b on p in [-1, 1]: the solution map is exactly
    rank one, u(p) = (1 + p/2) A^{-1} b, and affine in p."""

    dim = 1
    domain = ((-1.0, 1.0),)

    def __init__(self, n=4, seed=3):
        self.n = n
        self.A = spd_matrix(n, seed=seed)
        self.b = np.random.default_rng(seed + 1).standard_normal(n)
        self._chol = cho_factor(self.A)

    @staticmethod
    def load(p):
        return 1.0 + 0.5 * float(np.atleast_1d(p)[0])

    def residual(self, u, p):
        return self.load(p) * self.b - self.A @ u

    def precond_apply(self, vec, p, u_state):
        return cho_solve(self._chol, vec)

    def precond_matvec(self, vec, p, u_state):
        return self.A @ vec

    def energy(self, u, p):
        return 0.5 * u @ self.A @ u - self.load(p) * (self.b @ u)

    def exact_states(self, points):
        """One row per parameter point."""
        u0 = cho_solve(self._chol, self.b)
        loads = 1.0 + 0.5 * np.asarray(points, dtype=float).reshape(-1)
        return np.outer(loads, u0)


class AffineLoadProblem(ParametricProblem):
    """A u = b0 + p b1 + p^2 b2: rank-three solution map, still linear
    in u so every inner solve is exact in a couple of iterations."""

    dim = 1
    domain = ((-1.0, 1.0),)

    def __init__(self, n=4, seed=11):
        self.n = n
        self.A = spd_matrix(n, seed=seed)
        rng = np.random.default_rng(seed + 1)
        self.loads = rng.standard_normal((3, n))
        self._chol = cho_factor(self.A)

    def rhs(self, p):
        t = float(np.atleast_1d(p)[0])
        return self.loads[0] + t * self.loads[1] + t * t * self.loads[2]

    def residual(self, u, p):
        return self.rhs(p) - self.A @ u

    def precond_apply(self, vec, p, u_state):
        return cho_solve(self._chol, vec)

    def precond_matvec(self, vec, p, u_state):
        return self.A @ vec

    def energy(self, u, p):
        return 0.5 * u @ self.A @ u - self.rhs(p) @ u

    def exact_states(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1)
        rhs = np.array([self.rhs(np.array([t])) for t in pts])
        return cho_solve(self._chol, rhs.T).T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def separable():
    return SeparableLinearProblem()


@pytest.fixture
def affine():
    return AffineLoadProblem()
