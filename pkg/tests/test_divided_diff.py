import numpy as np
import pytest

from tracetaylor.divided_diff import (DividedDifferenceCache, NodeList,
                                      PolynomialProbe, divided_difference,
                                      mean_value_bound_check,
                                      permutation_symmetry_residual,
                                      sqrt_split_residual,
                                      u_conjugation_residual)
from tracetaylor.scalar_functions import (DerivativeOrderError, dyadic_root,
                                          make_poly_bump)


def test_polynomial_probe_values():
    assert divided_difference(PolynomialProbe.monomial(2), (1.0, 3.0)) == pytest.approx(4.0)
    assert divided_difference(PolynomialProbe.monomial(3), (1.0, 1.0, 1.0)) == pytest.approx(3.0)
    # complete homogeneous symmetric polynomial h_2(0,1,2) = 7
    assert divided_difference(PolynomialProbe.monomial(4), (0.0, 1.0, 2.0)) == pytest.approx(7.0)


def test_single_node_is_value():
    f = make_poly_bump(0.0, 1.0, 4)
    assert divided_difference(f, (0.25,)) == pytest.approx(f.value(0.25))


def test_confluent_switch_continuity():
    f = make_poly_bump(0.0, 1.0, 6)
    for a in (-0.4, 0.0, 0.55):
        h = 1e-7 * (1 + abs(a))
        two_node = divided_difference(f, (a, a + h))
        assert abs(two_node - f.deriv(1, a)) < 1e-6


def test_node_merging():
    nl = NodeList((0.5, 0.5 + 1e-12, -0.2), merge_tol=1e-9)
    assert nl.max_confluency() == 2
    assert nl.order == 2
    f = make_poly_bump(0.0, 1.0, 6)
    merged = divided_difference(f, nl)
    exact = divided_difference(f, (0.5, 0.5, -0.2))
    assert merged == pytest.approx(exact, abs=1e-9)


def test_confluency_needs_derivatives():
    f = make_poly_bump(0.0, 1.0, 4)  # only 3 certified derivatives
    with pytest.raises(DerivativeOrderError):
        divided_difference(f, (0.1,) * 6)


def test_permutation_symmetry():
    f = make_poly_bump(0.0, 1.0, 8)
    assert permutation_symmetry_residual(f, (0.1, 0.7)) < 1e-12
    rng = np.random.default_rng(0)
    nodes = rng.uniform(-0.9, 0.9, 4)
    assert permutation_symmetry_residual(f, nodes) < 1e-9
    a = divided_difference(f, (0.3, 0.3, 0.6))
    b = divided_difference(f, (0.3, 0.6, 0.3))
    assert abs(a - b) < 1e-9


def test_sqrt_split_low_order():
    f = make_poly_bump(0.0, 1.0, 8)
    g = dyadic_root(f, 1)
    # n=1 Leibniz by hand: f^[1](a,b) = g(a)g^[1](a,b) + g^[1](a,b)g(b)
    a, b = 0.2, -0.5
    lhs = divided_difference(f, (a, b))
    gg = divided_difference(g, (a, b))
    assert abs(lhs - (g.value(a) * gg + gg * g.value(b))) < 1e-10
    assert sqrt_split_residual(f, (a, b)) < 1e-10
    assert sqrt_split_residual(f, (0.3, 0.3)) < 1e-10
    rng = np.random.default_rng(1)
    assert sqrt_split_residual(f, rng.uniform(-0.9, 0.9, 3)) < 1e-9


def test_u_conjugation_identity():
    f = make_poly_bump(0.0, 1.0, 8)
    assert u_conjugation_residual(f, (0.4, -0.1)) < 1e-10
    assert u_conjugation_residual(f, (0.0, 0.0, 0.0)) < 1e-10
    rng = np.random.default_rng(2)
    assert u_conjugation_residual(f, rng.uniform(-0.9, 0.9, 4)) < 1e-9


def test_mean_value_bound():
    f = make_poly_bump(0.0, 1.0, 8)
    assert mean_value_bound_check(f, (0.1, 0.1, 0.1))
    rng = np.random.default_rng(3)
    for _ in range(100):
        p = int(rng.integers(1, 5))
        nodes = rng.uniform(-1.1, 1.1, p + 1)
        assert mean_value_bound_check(f, nodes)


def test_cache_consistency():
    f = make_poly_bump(0.0, 1.0, 8)
    dd = DividedDifferenceCache(f)
    nodes = (0.55, -0.25, 0.1)
    assert dd(*nodes) == pytest.approx(divided_difference(f, nodes))
    # permuted call hits the same cached value
    assert dd(0.1, 0.55, -0.25) == dd(*nodes)
