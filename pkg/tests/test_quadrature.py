"""Quadrature rules checked against closed-form integrals."""

import math

import numpy as np
import pytest
from scipy.special import beta as beta_fn, gamma as gamma_fn

from feynkac.quadrature import (cell_rule, edge_graded_rule, gauss_jacobi,
                                gauss_legendre, map_interval,
                                singular_inner_left, singular_inner_right)


def test_gauss_legendre_polynomial_exactness():
    for n in (1, 2, 5, 12):
        rule = gauss_legendre(n)
        for k in range(2 * n):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            got = float(np.sum(rule.weights * rule.nodes ** k))
            assert got == pytest.approx(exact, abs=1e-13)


def test_gauss_legendre_rejects_empty_rule():
    with pytest.raises(ValueError):
        gauss_legendre(0)


def test_gauss_jacobi_weighted_moments():
    # substitute x = 2u - 1:
    # int_{-1}^1 (1-x)^a (1+x)^b x^k dx
    #   = 2^{a+b+1} sum_t C(k,t) 2^t (-1)^{k-t} B(b+t+1, a+1)
    for a, b in ((0.5, 0.0), (-0.4, 0.0), (0.0, 1.3), (-0.7, -0.2)):
        rule = gauss_jacobi(8, a, b)
        for k in range(4):
            exact = 2.0 ** (a + b + 1.0) * sum(
                math.comb(k, t) * 2.0 ** t * (-1.0) ** (k - t)
                * beta_fn(b + t + 1.0, a + 1.0) for t in range(k + 1))
            got = float(np.sum(rule.weights * rule.nodes ** k))
            assert got == pytest.approx(exact, rel=1e-12)


def test_gauss_jacobi_zero_exponents_fall_back_to_legendre():
    rule = gauss_jacobi(6, 0.0, 0.0)
    assert rule.family == "legendre"


def test_gauss_jacobi_rejects_nonintegrable_weight():
    with pytest.raises(ValueError):
        gauss_jacobi(4, -1.0, 0.0)
    with pytest.raises(ValueError):
        gauss_jacobi(4, 0.0, -1.5)


def test_map_interval_affine_transport():
    x, w = map_interval(gauss_legendre(6), 2.0, 5.0)
    got = float(np.sum(w * x ** 3))
    assert got == pytest.approx((5.0 ** 4 - 2.0 ** 4) / 4.0, rel=1e-14)


def test_cell_rule_composite_integration():
    edges = np.array([0.0, 0.25, 0.3, 0.8, 1.0])
    x, w = cell_rule(edges, 12)
    got = float(np.sum(w * np.cos(3.0 * x)))
    assert got == pytest.approx(math.sin(3.0) / 3.0, abs=1e-14)
    assert float(np.sum(w)) == pytest.approx(1.0, abs=1e-15)


def test_edge_graded_rule_endpoint_singularities():
    # bounded integrands with algebraic endpoint kinks: x^a (1-x)^b = Beta
    x, w = edge_graded_rule(0.0, 1.0, npts=8, levels=16)
    for a, b in ((0.3, 0.45), (0.1, 0.7)):
        got = float(np.sum(w * x ** a * (1.0 - x) ** b))
        assert got == pytest.approx(beta_fn(a + 1.0, b + 1.0), rel=1e-8)
    # integrable blow-up converges too, at reduced accuracy
    got = float(np.sum(w * x ** -0.2))
    assert got == pytest.approx(1.0 / 0.8, rel=1e-5)


def test_edge_graded_rule_respects_interval():
    x, w = edge_graded_rule(0.5, 2.0, npts=6, levels=10)
    assert x.min() > 0.5 and x.max() < 2.0
    assert float(np.sum(w)) == pytest.approx(1.5, rel=1e-13)


@pytest.mark.parametrize("alpha", [1.3, 1.7])
def test_singular_inner_left_monomial_pairs(alpha):
    # I^{2-alpha} x^k = Gamma(k+1)/Gamma(k+3-alpha) x^{k+2-alpha};
    # pairing with x^m integrates to Gamma(k+1)/Gamma(k+3-alpha)/(k+m+3-alpha)
    for k in range(4):
        for m in range(4):
            exact = (gamma_fn(k + 1.0) / gamma_fn(k + 3.0 - alpha)
                     / (k + m + 3.0 - alpha))
            got = singular_inner_left(lambda s, k=k: s ** k,
                                      lambda x, m=m: x ** m, alpha)
            assert got == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("alpha", [1.3, 1.7])
def test_singular_inner_right_mirrors_left(alpha):
    # with reflected monomials the right-sided value equals the left-sided one
    for k in range(3):
        left = singular_inner_left(lambda s, k=k: s ** k, lambda x: x ** 2, alpha)
        right = singular_inner_right(lambda s, k=k: (1.0 - s) ** k,
                                     lambda x: (1.0 - x) ** 2, alpha)
        assert right == pytest.approx(left, rel=1e-12)


def test_singular_inner_left_identity_at_alpha_two():
    got = singular_inner_left(lambda s: s ** 2, lambda x: x ** 3, 2.0)
    assert got == pytest.approx(1.0 / 6.0, rel=1e-13)
