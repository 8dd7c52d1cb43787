"""Quadrature rules: exactness degrees, normalization, tensorization."""

import numpy as np
import pytest

from nipgd.quadrature import (
    QuadratureRule,
    gauss_legendre_1d,
    integrate,
    piecewise_gauss_1d,
    tensorize,
    trapezoid_1d,
)


@pytest.mark.parametrize("q", [1, 2, 3, 5, 8])
def test_gauss_exact_to_degree_2q_minus_1(q):
    # uniform probability measure on [-1, 1]: int t^k = 1/(k+1) for even k
    rule = gauss_legendre_1d(q, (-1.0, 1.0))
    for k in range(2 * q):
        exact = 1.0 / (k + 1) if k % 2 == 0 else 0.0
        val = float(np.sum(rule.weights * rule.points[:, 0] ** k))
        assert abs(val - exact) < 1e-12, (q, k)


def test_gauss_not_exact_beyond_2q_minus_1():
    rule = gauss_legendre_1d(2, (-1.0, 1.0))
    k = 4  # degree 2q
    val = float(np.sum(rule.weights * rule.points[:, 0] ** k))
    assert abs(val - 1.0 / (k + 1)) > 1e-4


def test_gauss_interval_mapping():
    rule = gauss_legendre_1d(5, (2.0, 5.0))
    assert rule.points.min() > 2.0 and rule.points.max() < 5.0
    # mean of t^2 over [2, 5] is (125 - 8) / (3 * 3)
    val = integrate(rule, lambda t: t[0] ** 2)
    assert abs(val - 117.0 / 9.0) < 1e-12


def test_probability_normalization():
    prob = gauss_legendre_1d(4, (0.0, 3.0))
    raw = gauss_legendre_1d(4, (0.0, 3.0), probability_normalized=False)
    assert abs(prob.weights.sum() - 1.0) < 1e-14
    assert abs(raw.weights.sum() - 3.0) < 1e-14
    assert np.allclose(raw.weights, 3.0 * prob.weights)


def test_piecewise_rule_handles_kinks():
    # int_0^1 max(sin(3 pi x), 0) dx = 4 / (3 pi): two positive lobes,
    # 2/(3 pi) each; the kinks at 1/3 and 2/3 sit inside cells, so
    # convergence is limited to O(h^2) by the kink cells
    exact = 4.0 / (3.0 * np.pi)
    f = lambda x: max(np.sin(3.0 * np.pi * x[0]), 0.0)
    assert abs(integrate(piecewise_gauss_1d(100, 2, (0.0, 1.0)), f) - exact) < 2e-5
    assert abs(integrate(piecewise_gauss_1d(1000, 2, (0.0, 1.0)), f) - exact) < 1e-6


def test_piecewise_rule_point_count():
    rule = piecewise_gauss_1d(7, 3, (0.0, 1.0))
    assert rule.n_points == 21
    assert np.all(np.diff(rule.points[:, 0]) > 0)


def test_trapezoid_nodes_and_weights():
    rule = trapezoid_1d(4, (0.0, 1.0))
    assert np.array_equal(rule.points[:, 0], np.linspace(0.0, 1.0, 5))
    h = 0.25
    assert np.allclose(rule.weights, [h / 2, h, h, h, h / 2])
    assert abs(rule.weights.sum() - 1.0) < 1e-14


def test_trapezoid_exact_on_piecewise_linear():
    # hat function on the same mesh: interior integral h, boundary h/2
    e = 8
    rule = trapezoid_1d(e, (0.0, 1.0), probability_normalized=False)
    nodes = np.linspace(0.0, 1.0, e + 1)
    h = 1.0 / e

    def hat(j, t):
        return max(0.0, 1.0 - abs(t - nodes[j]) / h)

    for j in range(e + 1):
        val = float(np.sum(rule.weights * [hat(j, t) for t in rule.points[:, 0]]))
        exact = h if 0 < j < e else h / 2
        assert abs(val - exact) < 1e-14


def test_trapezoid_is_not_a_gauss_rule():
    rule = trapezoid_1d(4, (0.0, 1.0))
    val = integrate(rule, lambda t: t[0] ** 2)
    assert abs(val - 1.0 / 3.0) > 1e-4  # only first-order exact


def test_tensorize_product_exactness():
    rule = tensorize([gauss_legendre_1d(3, (-1.0, 1.0))] * 2)
    assert rule.dim == 2
    assert rule.n_points == 9
    # int x^2 y^4 over the product of uniform measures
    val = integrate(rule, lambda p: p[0] ** 2 * p[1] ** 4)
    assert abs(val - (1.0 / 3.0) * (1.0 / 5.0)) < 1e-12


def test_tensorize_order_is_deterministic():
    a = tensorize([gauss_legendre_1d(2), gauss_legendre_1d(3)])
    b = tensorize([gauss_legendre_1d(2), gauss_legendre_1d(3)])
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.weights, b.weights)
    # last factor varies fastest
    assert np.allclose(a.points[:3, 0], a.points[0, 0])


def test_integrate_matches_manual_sum(rng):
    rule = gauss_legendre_1d(6, (0.0, 2.0))
    c = rng.standard_normal(4)
    f = lambda t: c @ t[0] ** np.arange(4)
    manual = float(np.sum(rule.weights * [f(p) for p in rule.points]))
    assert abs(integrate(rule, f) - manual) < 1e-14


def test_rule_validation():
    with pytest.raises(ValueError):
        gauss_legendre_1d(0)
    with pytest.raises(ValueError):
        gauss_legendre_1d(3, (1.0, 1.0))
    with pytest.raises(ValueError):
        trapezoid_1d(0)
    with pytest.raises(ValueError):
        QuadratureRule(np.zeros((3, 1)), np.array([0.5, 0.5]))  # length mismatch
    with pytest.raises(ValueError):
        QuadratureRule(np.zeros((2, 1)), np.array([0.5, -0.5]))  # negative weight
