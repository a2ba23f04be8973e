from math import factorial, pi

import numpy as np
import pytest
from hypothesis import given, strategies as st

from metricslab.bergman import (
    GramFactorizationError, KernelPoleError, NumericKernel, UndefinedBergmanForm, bergman_form,
    bergman_quantities, build_numeric_engine, closed_form_engine, comparison_probes, egg_gram_cross_check,
    extremal_B1, factor_gram, kernel_closed_form, monomial_basis,
)
from metricslab.domains import Ball, Egg, KohnNirenberg, Polydisc, Truncated, disc, interior_points
from metricslab.quadrature import IntegrationPlan

# frozen from a 120 x 120 term mpmath series over the exact monomial norms
EGG_SERIES = [
    (2.0, [0.3 - 0.2j, 0.1 + 0.25j], [-0.1 + 0.4j, 0.2 - 0.1j], 0.165940177746207703921 - 0.001269078027073951711j),
    (1.0, [0.5 + 0.1j, -0.2 + 0.3j], [0.4, 0.1 + 0.1j], 0.122948833181185559457 + 0.036281363213640099852j),
]
# frozen from symbolic differentiation of log K for Egg(3/2) at (0.4 + 0.3i, 0.2 - 0.1i)
EGG_FORM = np.array([[2.1331256007662183018, 0.47558331535041144717 - 0.95116663070082289435j],
                     [0.47558331535041144717 + 0.95116663070082289435j, 6.3411108713388192957]])


def reference_kernel(z, w):
    """Reference Egg(2) kernel formula, typed independently of the package."""
    e = np.exp(2 * z[..., 0] * np.conj(w[..., 0]))
    t = z[..., 1] * np.conj(w[..., 1])
    return 2 * e * (1 + t * e) / (pi**2 * (1 - t * e) ** 3)


def test_closed_form_origin_values():
    zero = np.zeros(2)
    assert kernel_closed_form(Egg(2.0), zero, zero) == pytest.approx(2 / pi**2)
    assert kernel_closed_form(Egg(1.0), zero, zero) == pytest.approx(1 / pi**2)
    assert kernel_closed_form(disc(), [0], [0]) == pytest.approx(1 / pi)
    assert kernel_closed_form(Ball(2), zero, zero) == pytest.approx(2 / pi**2)


@pytest.mark.parametrize("kappa, z, w, expected", EGG_SERIES)
def test_egg_closed_form_matches_series(kappa, z, w, expected):
    assert kernel_closed_form(Egg(kappa), np.array(z), np.array(w)) == pytest.approx(expected, rel=1e-14)


def test_egg2_matches_reference_formula():
    z, w = comparison_probes(Egg(2.0), 20, seed=5)
    np.testing.assert_allclose(kernel_closed_form(Egg(2.0), z, w), reference_kernel(z, w), rtol=1e-13)


def test_polydisc_and_ball_closed_forms(rng):
    z = 0.4 * (rng.uniform(-1, 1, (5, 2)) + 1j * rng.uniform(-1, 1, (5, 2)))
    w = 0.4 * (rng.uniform(-1, 1, (5, 2)) + 1j * rng.uniform(-1, 1, (5, 2)))
    pd = kernel_closed_form(Polydisc((1.0, 2.0)), z, w)
    expected = (1 / (pi * (1 - z[:, 0] * np.conj(w[:, 0]))**2)
                * 1 / (pi * 4 * (1 - z[:, 1] * np.conj(w[:, 1]) / 4)**2))
    np.testing.assert_allclose(pd, expected, rtol=1e-13)
    ball = kernel_closed_form(Ball(2), z, w)
    np.testing.assert_allclose(ball, 2 / pi**2 / (1 - np.sum(z * np.conj(w), axis=1))**3, rtol=1e-13)


def test_pole_error():
    with pytest.raises(KernelPoleError):
        kernel_closed_form(disc(), [1.0], [1.0])
    with pytest.raises(KernelPoleError):
        kernel_closed_form(Egg(1.0), np.array([0, 1.0]), np.array([0, 1.0]))


def test_closed_forms_hermitian(rng):
    for spec in (Ball(2), Polydisc((1.0, 1.0)), Egg(1.3)):
        z = interior_points(spec, 50, seed=1)
        w = interior_points(spec, 50, seed=2)
        K = closed_form_engine(spec)
        np.testing.assert_allclose(K.kernel(z, w), np.conj(K.kernel(w, z)), rtol=1e-12)


# -- Bergman forms ---------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
def test_ball_form_at_origin(n):
    np.testing.assert_allclose(bergman_form(closed_form_engine(Ball(n)), np.zeros(n)).matrix,
                               (n + 1) * np.eye(n), atol=1e-14)


def test_disc_form_at_origin():
    assert bergman_form(closed_form_engine(disc()), [0]).matrix[0, 0] == pytest.approx(2)


def test_egg_form_matches_symbolic_value():
    np.testing.assert_allclose(bergman_form(closed_form_engine(Egg(1.5)), [0.4 + 0.3j, 0.2 - 0.1j]).matrix,
                               EGG_FORM, rtol=1e-13)


def test_egg_form_on_line_is_euclidean():
    for kappa in (0.5, 1.0, 2.0):
        B = bergman_form(closed_form_engine(Egg(kappa)), [1.7 - 0.4j, 0]).matrix
        assert B[0, 0].real == pytest.approx(kappa, abs=1e-12)
        assert abs(B[0, 1]) < 1e-14 and B[1, 1].real > 0


@pytest.mark.parametrize("spec", [Ball(2), Polydisc((1.0, 2.0)), Egg(1.0), Egg(2.0)], ids=str)
def test_analytic_matches_fd(spec):
    engine = closed_form_engine(spec)
    for p in interior_points(spec, 10, seed=4, radius=2.0):
        if np.linalg.norm(p) > 2 or spec.rho(p) > -0.05:
            continue
        a = bergman_form(engine, p, "analytic").matrix
        f = bergman_form(engine, p, "fd").matrix
        assert np.abs(a - f).max() <= 1e-5 * np.abs(a).max()


@given(st.integers(0, 2**31), st.floats(0.2, 4.0))
def test_egg_schur_complement_dominates(seed, kappa):
    p = interior_points(Egg(kappa), 1, seed=seed, radius=3.0)[0]
    B = bergman_form(closed_form_engine(Egg(kappa)), p).matrix
    schur = B[0, 0].real - abs(B[0, 1]) ** 2 / B[1, 1].real
    assert schur >= kappa - 1e-6 * max(1.0, abs(B[0, 0]))


class VanishingKernel:
    provenance = "numeric_D0"

    def diag(self, z):
        return np.zeros(np.shape(z)[:-1])


def test_undefined_form():
    with pytest.raises(UndefinedBergmanForm, match="not positive"):
        bergman_form(VanishingKernel(), [0.1])
    with pytest.raises(UndefinedBergmanForm):
        bergman_quantities(VanishingKernel(), [0.1], [1])


# -- numeric engines ---------------------------------------------------------------


def test_monomial_basis_order():
    b = monomial_basis(2, 2)
    assert b.tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    assert len(monomial_basis(2, 12)) == 91


def test_polydisc_diagonal_increases_to_closed_form():
    spec = Polydisc((1.0, 1.0))
    p = np.array([0.5, 0.3j])
    exact = float(closed_form_engine(spec).diag(p))
    vals = [float(build_numeric_engine(spec, D).diag(p)) for D in (2, 4, 8, 12, 16)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < exact and vals[-1] == pytest.approx(exact, rel=1e-2)


def test_egg1_degree12_origin():
    engine = build_numeric_engine(Egg(1.0), 12, IntegrationPlan(1_000_000, seed=7))
    assert engine.gram_source == "exact"
    assert float(engine.diag(np.zeros(2))) == pytest.approx(1 / pi**2, rel=1e-2)


def test_egg_mc_degree_bound():
    with pytest.raises(ValueError, match="variance bound"):
        build_numeric_engine(Egg(1.0), 8, IntegrationPlan(1_000_000), gram="mc")


def test_egg_mc_cross_check():
    assert egg_gram_cross_check(Egg(2.0), 3, IntegrationPlan(200_000, seed=1)) < 5


def test_numeric_hermitian_exact_and_json_roundtrip():
    spec = Truncated(KohnNirenberg(), 3.0)
    engine = build_numeric_engine(spec, 3, IntegrationPlan(50_000, seed=2))
    z = interior_points(spec, 20, seed=1)
    w = interior_points(spec, 20, seed=2)
    np.testing.assert_array_equal(engine.kernel(z, w), np.conj(engine.kernel(w, z)))
    again = NumericKernel.from_json(engine.to_json())
    np.testing.assert_array_equal(again.kernel(z, w), engine.kernel(z, w))
    assert again.provenance == "numeric_D3"
    assert np.all(engine.diag(z) > 0)


def test_truncation_monotonicity():
    small = Truncated(KohnNirenberg(), 2.0)
    big = Truncated(KohnNirenberg(), 3.0)
    plan = IntegrationPlan(400_000, seed=3)
    k_small = build_numeric_engine(small, 2, plan)
    k_big = build_numeric_engine(big, 2, plan)
    pts = interior_points(small, 20, seed=5)
    # both are degree-2 projections; the smaller domain has the larger diagonal up to MC noise
    assert np.all(k_small.diag(pts) >= 0.9 * k_big.diag(pts))


def test_singular_gram():
    G = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    with pytest.raises(GramFactorizationError) as err:
        factor_gram(G)
    assert err.value.condition > 1e10


# -- B0 and B1 ----------------------------------------------------------------------


def test_disc_quantities_at_origin():
    engine = build_numeric_engine(disc(), 12)
    q = bergman_quantities(engine, [0], [1])
    assert q.B0 == pytest.approx(1 / pi)
    assert q.B1 == pytest.approx(2 / pi, rel=1e-6)
    assert q.B1_extremal == pytest.approx(2 / pi, rel=1e-12)
    assert q.residual < 1e-3


def test_ball_B0():
    assert bergman_quantities(closed_form_engine(Ball(2)), np.zeros(2), [1, 0]).B0 == pytest.approx(2 / pi**2)


def test_extremal_B1_matches_identity_in_finite_basis():
    # within a fixed basis, B1 = B0 * b holds exactly for K_D; compare with an FD Bergman form of K_D
    engine = build_numeric_engine(Polydisc((1.0, 1.0)), 6)
    p, v = np.array([0.2 + 0.1j, -0.3j]), np.array([1.0, 0.5 - 0.5j])
    B0, B1 = extremal_B1(engine, p, v)
    fd = B0 * bergman_form(engine, p, "fd")(v).real
    assert B1 == pytest.approx(fd, rel=1e-6)


def test_polydisc_residual_decreases():
    spec = Polydisc((1.0, 1.0))
    p, v = np.array([0.3, 0.2j]), np.array([1.0, 1.0])
    res = [bergman_quantities(closed_form_engine(spec), p, v, build_numeric_engine(spec, D)).residual
           for D in (4, 8, 12)]
    assert res[0] > res[1] > res[2]
