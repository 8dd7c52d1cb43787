"""Deterministic quadrature rules on boxes of parameter space.

All rules are represented by a flat list of points and strictly positive
weights. By default the weights are normalized against the uniform
probability measure of the underlying interval (or box), so that the
weights of a rule on ``[a, b]`` sum to one rather than to ``b - a``.
This is the convention expected by the projection and error formulas in
the rest of the package, where integrals are always taken against the
uniform parameter density.

Gauss-Legendre nodes are computed by Newton iteration on the Legendre
three-term recurrence (no eigenvalue solver, no randomness), so rules
are bit-reproducible across runs and platforms with the same libm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "QuadratureRule",
    "gauss_legendre_1d",
    "piecewise_gauss_1d",
    "trapezoid_1d",
    "tensorize",
    "integrate",
]

# Newton solves for Legendre roots are accepted at this step size.
_NODE_TOL = 1e-15
_NODE_MAX_NEWTON = 100


@dataclass(frozen=True)
class QuadratureRule:
    """A fixed set of quadrature points and weights.

    Parameters
    ----------
    points : ndarray of shape (n_points, dim)
        Quadrature nodes. One row per node, one column per parameter
        coordinate; 1-D rules have ``dim == 1``.
    weights : ndarray of shape (n_points,)
        Strictly positive weights. For probability-normalized rules
        they sum to one.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.shape[0]:
            raise ValueError(
                f"point/weight count mismatch: {pts.shape[0]} points, {w.shape[0]} weights"
            )
        if w.size == 0:
            raise ValueError("empty quadrature rule")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ValueError("non-finite quadrature data")
        if np.any(w <= 0.0):
            raise ValueError("quadrature weights must be strictly positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n_points(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _legendre_and_derivative(q: int, x: np.ndarray):
    """Evaluate P_q and P_q' on [-1, 1] via the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    if q == 0:
        return p_prev, np.zeros_like(x)
    for k in range(1, q):
        p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        p_prev, p = p, p_next
    # derivative away from the endpoints; Gauss nodes are interior
    dp = q * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def _gauss_legendre_reference(q: int):
    """Nodes and weights of the q-point rule on [-1, 1], weight total 2."""
    i = np.arange(1, q + 1)
    x = np.cos(np.pi * (i - 0.25) / (q + 0.5))
    for _ in range(_NODE_MAX_NEWTON):
        p, dp = _legendre_and_derivative(q, x)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) < _NODE_TOL:
            break
    else:
        raise RuntimeError(f"Legendre node iteration stalled for q={q}")
    p, dp = _legendre_and_derivative(q, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    # enforce exact symmetry of the reference rule
    order = np.argsort(x)
    return x[order], w[order]


def gauss_legendre_1d(
    q: int,
    interval: Sequence[float] = (-1.0, 1.0),
    probability_normalized: bool = True,
) -> QuadratureRule:
    """q-point Gauss-Legendre rule on an interval.

    The rule integrates polynomials up to degree ``2q - 1`` exactly.
    With ``probability_normalized`` (the default) the weights sum to 1
    and integrals are taken against the uniform density on the
    interval; otherwise they sum to the interval length.
    """
    if q < 1:
        raise ValueError(f"need at least one quadrature point, got q={q}")
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    x, w = _gauss_legendre_reference(int(q))
    pts = 0.5 * (a + b) + 0.5 * (b - a) * x
    if probability_normalized:
        w = 0.5 * w
    else:
        w = 0.5 * (b - a) * w
    return QuadratureRule(pts.reshape(-1, 1), w)


def piecewise_gauss_1d(
    n_elements: int,
    q_per_element: int,
    interval: Sequence[float] = (0.0, 1.0),
    probability_normalized: bool = True,
) -> QuadratureRule:
    """Composite Gauss rule: the interval is split into equal cells,
    each carrying a ``q_per_element``-point Gauss-Legendre rule.

    Exact for piecewise polynomials of degree ``2*q_per_element - 1``
    on the induced uniform mesh, and a robust choice for integrands
    with kinks that do not align with any mesh.
    """
    if n_elements < 1:
        raise ValueError(f"need at least one element, got {n_elements}")
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    edges = np.linspace(a, b, n_elements + 1)
    pts = []
    wts = []
    for e in range(n_elements):
        cell = gauss_legendre_1d(q_per_element, (edges[e], edges[e + 1]),
                                 probability_normalized=False)
        pts.append(cell.points)
        wts.append(cell.weights)
    pts = np.vstack(pts)
    w = np.concatenate(wts)
    if probability_normalized:
        w = w / (b - a)
    return QuadratureRule(pts, w)


def trapezoid_1d(
    n_elements: int,
    interval: Sequence[float] = (0.0, 1.0),
    probability_normalized: bool = True,
) -> QuadratureRule:
    """Composite trapezoid rule on a uniform mesh of the interval.

    The nodes are the ``n_elements + 1`` mesh vertices, each appearing
    once (interior vertices carry the merged weight of both adjacent
    cells). Exact for piecewise linears on the same mesh. Because the
    node count equals the dimension of the matching hat basis, a
    least-squares fit of samples at these nodes is plain interpolation,
    which makes the rule the natural companion of ``piecewise_linear_basis``
    when samples and basis coefficients must agree exactly.
    """
    if n_elements < 1:
        raise ValueError(f"need at least one element, got {n_elements}")
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    pts = np.linspace(a, b, n_elements + 1)
    h = (b - a) / n_elements
    w = np.full(n_elements + 1, h)
    w[0] = w[-1] = 0.5 * h
    if probability_normalized:
        w = w / (b - a)
    return QuadratureRule(pts.reshape(-1, 1), w)


def tensorize(rules: Sequence[QuadratureRule]) -> QuadratureRule:
    """Tensor product of 1-D (or lower-dimensional) rules.

    Point ordering is lexicographic with the last factor varying
    fastest, so the result is deterministic given its factors.
    """
    if len(rules) == 0:
        raise ValueError("tensorize needs at least one rule")
    pts = rules[0].points
    w = rules[0].weights
    for rule in rules[1:]:
        z_left, z_right = pts.shape[0], rule.points.shape[0]
        left = np.repeat(pts, z_right, axis=0)
        right = np.tile(rule.points, (z_left, 1))
        pts = np.hstack([left, right])
        w = np.repeat(w, z_right) * np.tile(rule.weights, z_left)
    return QuadratureRule(pts, w)


def integrate(rule: QuadratureRule, f: Callable[[np.ndarray], float]) -> float:
    """Apply the rule: sum_z w_z f(p_z).

    ``f`` receives one node at a time as an ndarray of shape (dim,).
    """
    total = 0.0
    for z in range(rule.n_points):
        total += rule.weights[z] * float(f(rule.points[z]))
    return total
