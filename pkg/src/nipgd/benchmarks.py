"""Built-in parametric problems used by the experiment drivers and tests.

Both problems derive from a strongly convex energy J(u; p), so the
residual R = -grad J has a unique zero for every parameter value and
the preconditioners below are symmetric positive definite.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .problems import ParametricProblem
from .quadrature import piecewise_gauss_1d

__all__ = ["ElectronicNetwork", "ObstacleProblem", "obstacle_profile"]


class ElectronicNetwork(ParametricProblem):
    """Five-node resistor network with a cubic (diode-like) nonlinearity.

    The state solves

        B u + (p1 + 2) (u^T u) u = (p2 + 25) f,   p in [-1, 1]^2,

    with B = b_scale * M the conductance matrix of the linear part (M
    the integer connectivity matrix of the all-equal-resistor network)
    and f the load pattern injecting current at the first node. The
    energy is J(u; p) = u^T B u / 2 + (p1 + 2) (u^T u)^2 / 4
    - (p2 + 25) f^T u. The preconditioner is the inverse of the linear
    part B, independent of both parameter and state.

    The default b_scale = 100 puts the problem in the regime where the
    linear part carries most of the curvature and the solution map is
    analytic well beyond the parameter box; shrinking b_scale makes the
    cubic term dominant and the map much harder to approximate in p.
    """

    def __init__(self, b_scale: float = 100.0):
        if not b_scale > 0.0:
            raise ValueError(f"b_scale must be positive, got {b_scale}")
        m = np.array(
            [
                [3.0, -1.0, -1.0, 0.0, -1.0],
                [-1.0, 3.0, -1.0, -1.0, 0.0],
                [-1.0, -1.0, 4.0, -1.0, -1.0],
                [0.0, -1.0, -1.0, 3.0, -1.0],
                [-1.0, 0.0, -1.0, -1.0, 4.0],
            ]
        )
        self.b_scale = float(b_scale)
        self.B = m * self.b_scale
        self.f = np.zeros(5)
        self.f[0] = 1.0
        self.n = 5
        self.dim = 2
        self.domain = ((-1.0, 1.0), (-1.0, 1.0))
        self.reentrant = True
        self._B_factor = scipy.linalg.cho_factor(self.B)

    def residual(self, u, p):
        u = np.asarray(u, dtype=float)
        p = np.atleast_1d(np.asarray(p, dtype=float))
        return (p[1] + 25.0) * self.f - (self.B @ u + (p[0] + 2.0) * (u @ u) * u)

    def precond_apply(self, vec, p, u_state):
        return scipy.linalg.cho_solve(self._B_factor, np.asarray(vec, dtype=float))

    def precond_matvec(self, vec, p, u_state):
        return self.B @ np.asarray(vec, dtype=float)

    def energy(self, u, p):
        u = np.asarray(u, dtype=float)
        p = np.atleast_1d(np.asarray(p, dtype=float))
        quad = 0.5 * u @ (self.B @ u)
        quart = 0.25 * (p[0] + 2.0) * (u @ u) ** 2
        return quad + quart - (p[1] + 25.0) * (self.f @ u)


def obstacle_profile(p, x):
    """Obstacle height g(p; x) = p [sin 3 pi x]_+ + (p - 1) [sin 3 pi x]_-.

    [y]_- denotes min(y, 0), so the profile is nonnegative: two bumps
    of height p on the outer thirds of (0, 1) and a central bump of
    height 1 - p. As p sweeps the unit interval the contact region
    migrates from the middle of the span to its sides.
    """
    x = np.asarray(x, dtype=float)
    s = np.sin(3.0 * np.pi * x)
    return float(p) * np.maximum(s, 0.0) + (1.0 - float(p)) * np.maximum(-s, 0.0)


class ObstacleProblem(ParametricProblem):
    """Penalized membrane held above an obstacle, P1 elements on (0, 1).

    The non-penetration condition u >= g is enforced by penalty; the
    energy on the interior degrees of freedom is

        J(u; p) = u^T K u / 2 - F^T u + (rho / 2) int [g(p) - u_h]_+^2 dx,

    with K the stiffness matrix of -u'' on a uniform mesh with
    homogeneous Dirichlet ends, F the load of f = 1, and the penalty
    integral evaluated with a fixed per-element Gauss rule (so residual
    and energy are exactly consistent). The obstacle's contact region
    migrates across the span as the parameter varies, so the solution
    family is far from any fixed rank-one profile. The preconditioner
    applies the inverse of the penalized tangent K + rho D(u; p), where
    D restricts a mass-like matrix to the active set [g - u_h]_+ > 0;
    factorizations are cached per (parameter, state).
    """

    def __init__(self, n_elements: int = 40, penalty: float = 1.0e3,
                 quad_per_element: int = 4):
        if n_elements < 2:
            raise ValueError(f"need at least 2 elements, got {n_elements}")
        self.n_elements = int(n_elements)
        self.penalty = float(penalty)
        self.h = 1.0 / self.n_elements
        self.n = self.n_elements - 1
        self.dim = 1
        self.domain = ((0.0, 1.0),)
        self.reentrant = True

        n = self.n
        self.K = (np.diag(np.full(n, 2.0)) + np.diag(np.full(n - 1, -1.0), 1)
                  + np.diag(np.full(n - 1, -1.0), -1)) / self.h
        self.F = np.full(n, self.h)

        spatial = piecewise_gauss_1d(self.n_elements, quad_per_element, (0.0, 1.0),
                                     probability_normalized=False)
        xq = spatial.points[:, 0]
        self._xq = xq
        self._wq = spatial.weights
        self._elem = np.clip((xq * self.n_elements).astype(int), 0, self.n_elements - 1)
        self._shape_r = xq * self.n_elements - self._elem
        self._shape_l = 1.0 - self._shape_r
        s = np.sin(3.0 * np.pi * xq)
        self._g_pos = np.maximum(s, 0.0)
        self._g_neg = np.maximum(-s, 0.0)
        self._factor_cache = {}

    def _g_at_quad(self, p):
        p0 = float(np.atleast_1d(p)[0])
        return p0 * self._g_pos + (1.0 - p0) * self._g_neg

    def _state_at_quad(self, u):
        u_nodes = np.concatenate([[0.0], np.asarray(u, dtype=float), [0.0]])
        return u_nodes[self._elem] * self._shape_l + u_nodes[self._elem + 1] * self._shape_r

    def residual(self, u, p):
        u = np.asarray(u, dtype=float)
        gap = self._g_at_quad(p) - self._state_at_quad(u)
        contact = self._wq * np.maximum(gap, 0.0)
        acc = np.zeros(self.n_elements + 1)
        np.add.at(acc, self._elem, contact * self._shape_l)
        np.add.at(acc, self._elem + 1, contact * self._shape_r)
        return self.F - self.K @ u + self.penalty * acc[1:-1]

    def energy(self, u, p):
        u = np.asarray(u, dtype=float)
        gap = self._g_at_quad(p) - self._state_at_quad(u)
        pen = 0.5 * self.penalty * float(self._wq @ np.maximum(gap, 0.0) ** 2)
        return 0.5 * u @ (self.K @ u) - self.F @ u + pen

    def tangent_matrix(self, p, u_state):
        """K + rho D(u_state; p) with D the active-set mass matrix."""
        gap = self._g_at_quad(p) - self._state_at_quad(u_state)
        wa = self._wq * (gap > 0.0)
        diag_acc = np.zeros(self.n_elements + 1)
        np.add.at(diag_acc, self._elem, wa * self._shape_l**2)
        np.add.at(diag_acc, self._elem + 1, wa * self._shape_r**2)
        off_acc = np.zeros(self.n_elements)
        np.add.at(off_acc, self._elem, wa * self._shape_l * self._shape_r)
        d = np.diag(diag_acc[1:-1])
        for i in range(self.n - 1):
            d[i, i + 1] = off_acc[i + 1]
            d[i + 1, i] = off_acc[i + 1]
        return self.K + self.penalty * d

    def _factorized_tangent(self, p, u_state):
        key = (float(np.atleast_1d(p)[0]), np.asarray(u_state, dtype=float).tobytes())
        hit = self._factor_cache.get(key)
        if hit is None:
            if len(self._factor_cache) >= 16:
                self._factor_cache.clear()
            hit = scipy.linalg.cho_factor(self.tangent_matrix(p, u_state))
            self._factor_cache[key] = hit
        return hit

    def precond_apply(self, vec, p, u_state):
        return scipy.linalg.cho_solve(self._factorized_tangent(p, u_state),
                                      np.asarray(vec, dtype=float))

    def precond_matvec(self, vec, p, u_state):
        return self.tangent_matrix(p, u_state) @ np.asarray(vec, dtype=float)
