from math import pi

import numpy as np
import pytest
from hypothesis import given, strategies as st

from metricslab.domains import Ball, Egg, KohnNirenberg, Polydisc, Truncated, hkn_domain
from metricslab.quadrature import (
    IntegralEstimate, IntegrationPlan, NoSamplingPlan, NonFiniteIntegrand, egg_max_mc_degree,
    egg_sampling_relative_variance, fiber_monomial_integral, gram_matrix, integrate, sample_domain,
)


def test_fiber_integral_examples():
    assert fiber_monomial_integral(Egg(1.0), 0, 0) == pytest.approx(pi**2)
    assert fiber_monomial_integral(Egg(1.0), 0, 1) == pytest.approx(pi**2 / 4)
    # |z|^2 over Egg(2): pi * int |z|^2 e^{-2|z|^2} dA = pi * pi/4
    assert fiber_monomial_integral(Egg(2.0), 1, 0) == pytest.approx(pi**2 / 4)


def test_ball_second_moment():
    est = integrate(Ball(1), lambda p: np.abs(p[:, 0]) ** 2 / pi, IntegrationPlan(1_000_000, seed=4))
    assert est.within(0.5)


def test_integrate_examples():
    plan = IntegrationPlan(200_000, seed=1)
    assert integrate(Ball(1), lambda p: np.ones(len(p)), plan).within(pi)
    est = integrate(Ball(1), lambda p: p[:, 0], plan)
    assert isinstance(est.value, complex) and est.within(0)
    assert integrate(Egg(1.0), lambda p: np.abs(p[:, 1]) ** 2, plan).within(pi**2 / 4)
    assert integrate(Egg(3.0), lambda p: np.ones(len(p)), plan).within(pi**2 / 3)
    assert integrate(Polydisc((1.0, 2.0)), lambda p: np.ones(len(p)), plan).within(4 * pi**2)


def test_weights_positive_finite():
    for spec in (Ball(2), Polydisc((1.0, 0.5)), Egg(2.0), Truncated(KohnNirenberg(), 3.0)):
        ss = sample_domain(spec, 10_000, seed=0)
        assert np.all(ss.weights > 0) and np.all(np.isfinite(ss.weights))


def test_unbounded_needs_truncation():
    with pytest.raises(NoSamplingPlan, match="truncate"):
        sample_domain(hkn_domain(), 10, seed=0)


def test_nonfinite_names_point():
    with pytest.raises(NonFiniteIntegrand, match="sample point"), np.errstate(all="ignore"):
        integrate(Ball(1), lambda p: 1 / (p[:, 0] * 0), IntegrationPlan(100))


@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 3))
def test_determinism_and_thread_independence(seed, strata, threads):
    f = lambda p: np.abs(p[:, 0]) ** 2 + p[:, 1]
    a = integrate(Egg(1.0), f, IntegrationPlan(20_000, seed, strata, threads=1))
    b = integrate(Egg(1.0), f, IntegrationPlan(20_000, seed, strata, threads=threads))
    assert a == b


def test_unbiased_on_random_egg_monomials():
    rng = np.random.default_rng(9)
    spec = Egg(1.5)
    for i in range(10):
        a, b = map(int, rng.integers(0, 3, size=2))
        est = integrate(spec, lambda p: np.abs(p[:, 0]) ** (2 * a) * np.abs(p[:, 1]) ** (2 * b),
                        IntegrationPlan(200_000, seed=i))
        assert est.within(fiber_monomial_integral(spec, a, b)), (a, b)


def test_stderr_shrinks_like_inverse_sqrt():
    f = lambda p: np.abs(p[:, 0]) ** 2
    errs = [integrate(Egg(1.0), f, IntegrationPlan(n, seed=2)).stderr for n in (10_000, 100_000, 1_000_000)]
    assert errs[0] > errs[1] > errs[2]
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(np.sqrt(10), rel=0.25)


def test_egg_variance_bound():
    # kappa-free: importance weight is constant
    assert egg_sampling_relative_variance(0, 0) == 0
    assert egg_sampling_relative_variance(0, 1) == pytest.approx(16 / 9 - 1)
    assert egg_max_mc_degree(1_000_000) == 6


def test_gram_matrix_matches_exact_norms():
    basis = lambda p: np.stack([np.ones(len(p)), p[:, 0], p[:, 1]], axis=1)
    G, se = gram_matrix(Ball(2), basis, IntegrationPlan(400_000, seed=3))
    exact = np.diag([pi**2 / 2, pi**2 / 6, pi**2 / 6])
    assert np.all(np.abs(G - exact) <= 4 * se + 1e-12)


def test_within_has_absolute_floor():
    assert IntegralEstimate(pi + 1e-14, 0.0, 10, 0).within(pi)
