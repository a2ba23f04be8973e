import numpy as np
import pytest
from hypothesis import given, strategies as st

from metricslab.calculus import (
    EvaluationError, LeviForm, levi_form, min_levi_eigenvalue, strong_pseudoconvexity_at, wirtinger_derivative,
)
from metricslab.domains import Ball, Egg, KohnNirenberg, hkn_domain
from metricslab.polynomial import HermitianPolynomial, fornaess_polynomial, hkn_polynomial

from conftest import random_points

# frozen from an independent symbolic computation (1/4 Laplacian in x, y)
HKN_LEVI_AT = (0.5 + 0.1j, 0.380576)
FORNAESS_LEVI_AT = (0.7 - 0.2j, 3.45885)  # t = 1.5
EXP_LEVI_AT = (0.3 + 0.4j, 1.6050317708596768551)


def test_wirtinger_examples():
    z = np.array([0.8 - 0.3j])
    assert wirtinger_derivative(HermitianPolynomial.abs_power(1, 0, 1), ((1,), (1,)), z) == pytest.approx(1)
    assert wirtinger_derivative(HermitianPolynomial(1, [((2,), (0,), 1.0)]), ((1,), (1,)), z) == 0
    assert wirtinger_derivative(HermitianPolynomial.abs_power(1, 0, 2), ((1,), (1,)), z) == pytest.approx(
        4 * abs(z[0]) ** 2)


def test_levi_examples():
    np.testing.assert_allclose(levi_form(HermitianPolynomial.norm_squared(2), [0.1, 0.2j]).matrix, np.eye(2))
    z, val = HKN_LEVI_AT
    assert levi_form(hkn_polynomial(), [z]).matrix[0, 0].real == pytest.approx(val, rel=1e-14)
    z, val = FORNAESS_LEVI_AT
    assert levi_form(fornaess_polynomial(1.5), [z]).matrix[0, 0].real == pytest.approx(val, rel=1e-14)
    z, val = EXP_LEVI_AT
    fd = levi_form(lambda p: np.exp(np.abs(p[:, 0]) ** 2), [z], mode="finite_difference")
    assert fd.matrix[0, 0].real == pytest.approx(val, abs=1e-6)


def test_exp_levi_matches_hand_formula_on_grid():
    for r in np.linspace(0, 2, 9):
        z = r * np.exp(0.7j)
        fd = levi_form(lambda p: np.exp(np.abs(p[:, 0]) ** 2), [z], mode="finite_difference", richardson=True)
        exact = np.exp(r**2) * (1 + r**2)
        assert abs(fd.matrix[0, 0] - exact) <= 1e-6 * max(1, exact)


def test_hkn_fd_matches_analytic():
    z = np.array([0.5 + 0.1j])
    fd = levi_form(hkn_polynomial(), z, mode="finite_difference").matrix
    np.testing.assert_allclose(fd, levi_form(hkn_polynomial(), z).matrix, atol=1e-6)


@given(st.integers(0, 2**32 - 1))
def test_fd_agrees_with_analytic_on_catalog_polynomials(seed):
    rng = np.random.default_rng(seed)
    z2 = random_points(rng, 1, 2)[0]
    P2 = HermitianPolynomial.abs_power(2, 0, 1) + HermitianPolynomial.abs_power(2, 1, 2) + HermitianPolynomial(
        2, [((1, 0), (0, 2), 0.3 + 0.2j)])
    for P, z in ((hkn_polynomial(), z2[:1]), (fornaess_polynomial(1.3), z2[:1]), (P2, z2)):
        exact = levi_form(P, z).matrix
        fd = levi_form(P, z, mode="finite_difference", richardson=True).matrix
        scale = max(1.0, np.abs(exact).max())
        assert np.abs(fd - exact).max() <= 1e-6 * scale


def test_pluriharmonic_levi_is_zero(rng):
    P = HermitianPolynomial(2, [((3, 1), (0, 0), 1 + 2j), ((0, 2), (0, 0), 0.5)])
    L = levi_form(P, random_points(rng, 20, 2)).matrix
    assert np.all(L == 0)


def test_min_eigenvalue_examples():
    assert min_levi_eigenvalue(np.eye(2)) == 1
    assert min_levi_eigenvalue(np.zeros((2, 2))) == 0
    assert min_levi_eigenvalue(LeviForm(np.zeros(2), np.diag([2.0, -3.0]))) == -3


def test_nan_names_point():
    with pytest.raises(EvaluationError, match="0.5"):
        levi_form(lambda p: np.where(p[:, 0].real > 0.5, np.nan, 0.0), [0.5 + 0j], mode="finite_difference")


def test_strong_pseudoconvexity():
    assert strong_pseudoconvexity_at(Ball(2), [np.sqrt(0.5), 1j * np.sqrt(0.5)]).strong
    assert strong_pseudoconvexity_at(Egg(1.0), [0, 1]).strong
    assert strong_pseudoconvexity_at(Egg(2.0), [0.3, np.exp(-0.09)]).strong
    assert strong_pseudoconvexity_at(KohnNirenberg(), [0, 0]).status == "not strong"
    # away from the origin the KN boundary is strongly pseudoconvex: solve x + |z|^2 x^2 + P(z) = 0
    a, c = 0.25, float(hkn_polynomial()(np.array([0.5 + 0j])))
    x = (-1 + np.sqrt(1 - 4 * a * c)) / (2 * a)
    assert strong_pseudoconvexity_at(KohnNirenberg(), [0.5, x]).strong
    with pytest.raises(ValueError):
        strong_pseudoconvexity_at(Ball(2), [0, 0])


def test_graph_boundary_with_degenerate_points():
    # HKN graph at the origin: tangential Levi form vanishes
    assert strong_pseudoconvexity_at(hkn_domain(), [0, 0]).status == "not strong"
