"""Parameter-space bases: orthonormality, interpolation, Gram matrices."""

import math

import numpy as np
import pytest

from nipgd.bases import (
    DegenerateRuleError,
    eval_matrix,
    gram,
    legendre_total_degree,
    piecewise_linear_basis,
)
from nipgd.quadrature import gauss_legendre_1d, tensorize, trapezoid_1d


def test_legendre_gram_is_identity():
    # total degree 5 in two parameters; a 6-point tensor rule is exact
    # for all products of degree <= 10
    basis = legendre_total_degree(2, 5)
    rule = tensorize([gauss_legendre_1d(6, (-1.0, 1.0))] * 2)
    g = gram(basis, rule)
    assert np.max(np.abs(g - np.eye(basis.m))) < 1e-10


@pytest.mark.parametrize("dim,degree", [(1, 0), (1, 4), (2, 3), (3, 2)])
def test_legendre_dimension_count(dim, degree):
    basis = legendre_total_degree(dim, degree)
    assert basis.m == math.comb(dim + degree, dim)
    assert basis.orthonormal


def test_legendre_matches_numpy_polynomials(rng):
    basis = legendre_total_degree(1, 6)
    for t in rng.uniform(-1.0, 1.0, size=5):
        vals = basis.evaluate(np.array([t]))
        for n in range(7):
            coeffs = np.zeros(n + 1)
            coeffs[n] = 1.0
            ref = np.sqrt(2.0 * n + 1.0) * np.polynomial.legendre.legval(t, coeffs)
            assert abs(vals[n] - ref) < 1e-12


def test_legendre_constant_first():
    basis = legendre_total_degree(2, 3)
    vals = basis.evaluate(np.array([0.3, -0.8]))
    assert abs(vals[0] - 1.0) < 1e-15
    assert basis.indices[0] == (0, 0)


def test_hat_basis_is_nodal(rng):
    basis = piecewise_linear_basis(6, (0.0, 1.0))
    psi = np.array([basis.evaluate(np.array([t])) for t in basis.nodes])
    assert np.allclose(psi, np.eye(basis.m), atol=1e-14)
    # partition of unity in between
    for t in rng.uniform(0.0, 1.0, size=10):
        vals = basis.evaluate(np.array([t]))
        assert abs(vals.sum() - 1.0) < 1e-14
        assert np.all(vals >= 0.0)


def test_hat_basis_rejects_outside_points():
    basis = piecewise_linear_basis(4, (0.0, 1.0))
    with pytest.raises(ValueError):
        basis.evaluate(np.array([1.5]))
    # tolerance for roundoff at the ends
    basis.evaluate(np.array([1.0 + 1e-14]))


def test_hat_gram_matches_mass_matrix():
    # uniform density on (0, 1): Gram = classical P1 mass matrix
    e = 5
    basis = piecewise_linear_basis(e, (0.0, 1.0))
    from nipgd.quadrature import piecewise_gauss_1d

    g = gram(basis, piecewise_gauss_1d(e, 2, (0.0, 1.0)))
    h = 1.0 / e
    exact = np.zeros((e + 1, e + 1))
    for j in range(e + 1):
        exact[j, j] = 2 * h / 3 if 0 < j < e else h / 3
        if j < e:
            exact[j, j + 1] = exact[j + 1, j] = h / 6
    assert np.max(np.abs(g - exact)) < 1e-14


def test_trapezoid_rule_interpolates_hat_basis():
    # nodes and hats in bijection: the eval matrix is the identity
    e = 7
    basis = piecewise_linear_basis(e, (0.0, 1.0))
    psi = eval_matrix(basis, trapezoid_1d(e, (0.0, 1.0)))
    assert np.allclose(psi, np.eye(e + 1), atol=1e-14)


def test_eval_matrix_shape_and_dim_check():
    basis = legendre_total_degree(2, 2)
    rule = tensorize([gauss_legendre_1d(3, (-1.0, 1.0))] * 2)
    psi = eval_matrix(basis, rule)
    assert psi.shape == (9, 6)
    with pytest.raises(ValueError):
        eval_matrix(basis, gauss_legendre_1d(3, (-1.0, 1.0)))


def test_gram_degenerate_rule_raises():
    basis = piecewise_linear_basis(3, (0.0, 1.0))
    # two points cannot distinguish four hats
    rule = gauss_legendre_1d(2, (0.0, 1.0))
    with pytest.raises(DegenerateRuleError):
        gram(basis, rule)


def test_basis_validation():
    with pytest.raises(ValueError):
        legendre_total_degree(0, 2)
    with pytest.raises(ValueError):
        legendre_total_degree(1, -1)
    with pytest.raises(ValueError):
        piecewise_linear_basis(0)
    basis = legendre_total_degree(2, 1)
    with pytest.raises(ValueError):
        basis.evaluate(np.array([0.1, 0.2, 0.3]))
