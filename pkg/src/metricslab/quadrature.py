"""Seeded Monte Carlo quadrature over catalog domains.

Estimates are bitwise reproducible for a fixed ``(integrand, plan, seed)``:
the sample budget is cut into a fixed list of strata, each stratum gets its
own child seed, and partial sums are reduced in stratum order regardless of
how many threads evaluate them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import factorial, pi
from typing import Callable

import numpy as np

from .domains import Ball, DomainSpec, Egg, Polydisc, Truncated, contains

CHUNK = 50_000


class NoSamplingPlan(ValueError):
    pass


class NonFiniteIntegrand(ArithmeticError):
    pass


@dataclass(frozen=True)
class IntegrationPlan:
    samples: int = 100_000
    seed: int = 0
    strata: int = 1
    threads: int | None = None

    def __post_init__(self):
        if self.samples < 2 or self.strata < 1:
            raise ValueError("need at least two samples and one stratum")


@dataclass(frozen=True)
class IntegralEstimate:
    value: complex | float
    stderr: float
    samples: int
    seed: int

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        # floor covers integrands whose sample variance is pure rounding
        return abs(self.value - target) <= sigmas * self.stderr + 1e-12 * abs(target)


@dataclass
class SampleSet:
    """Accepted points with importance weights.

    ``integral ~= sum(weights * f(points)) / proposals``; rejected proposals
    count toward ``proposals`` but contribute zero.
    """

    points: np.ndarray
    weights: np.ndarray
    proposals: int


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("METRICSLAB_THREADS", "1"))
    return max(1, int(threads))


def domain_volume(spec: DomainSpec) -> float:
    if isinstance(spec, Ball):
        return pi**spec.n * spec.radius ** (2 * spec.n) / factorial(spec.n)
    if isinstance(spec, Polydisc):
        return float(np.prod([pi * r**2 for r in spec.radii]))
    if isinstance(spec, Egg):
        return pi**2 / spec.kappa
    raise NoSamplingPlan(f"volume of {type(spec).__name__} is not available in closed form")


def _uniform_ball(rng, count: int, n: int, radius: float) -> np.ndarray:
    g = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return radius * g * rng.uniform(size=(count, 1)) ** (1.0 / (2 * n))


def _draw(spec: DomainSpec, count: int, rng) -> SampleSet:
    if isinstance(spec, Ball):
        pts = np.asarray(spec.center) + _uniform_ball(rng, count, spec.n, spec.radius)
        return SampleSet(pts, np.full(count, domain_volume(spec)), count)
    if isinstance(spec, Polydisc):
        r = np.asarray(spec.radii)
        rad = r * np.sqrt(rng.uniform(size=(count, spec.n)))
        pts = rad * np.exp(2j * pi * rng.uniform(size=(count, spec.n)))
        return SampleSet(pts, np.full(count, domain_volume(spec)), count)
    if isinstance(spec, Egg):
        # z ~ density (kappa/pi) exp(-kappa |z|^2); w uniform on the fiber disc
        kappa = spec.kappa
        z = (rng.normal(size=count) + 1j * rng.normal(size=count)) / np.sqrt(2 * kappa)
        fiber = np.exp(-kappa * np.abs(z) ** 2 / 2)
        w = fiber * np.sqrt(rng.uniform(size=count)) * np.exp(2j * pi * rng.uniform(size=count))
        return SampleSet(np.stack([z, w], axis=1), np.full(count, pi**2 / kappa), count)
    if isinstance(spec, Truncated):
        pts = _uniform_ball(rng, count, spec.n, spec.R)
        keep = contains(spec.inner, pts)
        vol = domain_volume(Ball(spec.n, radius=spec.R))
        return SampleSet(pts[keep], np.full(int(keep.sum()), vol), count)
    raise NoSamplingPlan(f"no sampling plan for {type(spec).__name__}; truncate first")


def sample_domain(spec: DomainSpec, count: int, seed: int) -> SampleSet:
    """Draw ``count`` proposals (weights are importance weights, see :class:`SampleSet`)."""
    return _draw(spec, int(count), np.random.default_rng(seed))


def fiber_monomial_integral(spec: Egg, a: int, b: int) -> float:
    """Exact ``int_Egg |z|^(2a) |w|^(2b)``.

    Integrating over the fiber disc gives ``pi exp(-kappa (b+1) |z|^2) / (b+1)``;
    the remaining Gaussian moment is ``pi a! / (kappa (b+1))^(a+1)``.
    """
    kappa = spec.kappa
    return pi**2 * factorial(a) / (kappa ** (a + 1) * (b + 1) ** (a + 2))


def egg_sampling_relative_variance(a: int, b: int) -> float:
    """Per-sample relative variance of the Egg estimator of ``int |z|^(2a) |w|^(2b)``.

    Independent of kappa: the importance weight is the constant ``pi^2 / kappa``.
    """
    ratio = factorial(2 * a) / factorial(a) ** 2 * (b + 1) ** (2 * a + 4) / (2 * b + 1) ** (2 * a + 2)
    return ratio - 1.0


def egg_max_mc_degree(samples: int, rel_tol: float = 0.05) -> int:
    """Largest total degree D whose Egg monomial norms are all estimated to ``rel_tol``."""
    D = 0
    while True:
        nxt = D + 1
        worst = max(egg_sampling_relative_variance(a, nxt - a) for a in range(nxt + 1))
        if np.sqrt(worst / samples) > rel_tol:
            return D
        D = nxt
        if D > 200:
            return D


def _stratum_seeds(plan: IntegrationPlan) -> list[tuple[int, np.random.SeedSequence]]:
    children = np.random.SeedSequence(plan.seed).spawn(plan.strata)
    base, extra = divmod(plan.samples, plan.strata)
    return [(base + (i < extra), children[i]) for i in range(plan.strata)]


def map_reduce(spec: DomainSpec, plan: IntegrationPlan, partial: Callable[[SampleSet], tuple]) -> list:
    """Evaluate ``partial`` on every chunk of every stratum; return results in fixed order."""

    def run(job):
        count, seq = job
        rng = np.random.default_rng(seq)
        out = []
        done = 0
        while done < count:
            m = min(CHUNK, count - done)
            out.append(partial(_draw(spec, m, rng)))
            done += m
        return out

    jobs = _stratum_seeds(plan)
    threads = min(resolve_threads(plan.threads), len(jobs))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    return [r for stratum in results for r in stratum]


def _check_finite(values: np.ndarray, points: np.ndarray) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        raise NonFiniteIntegrand(f"integrand is not finite at sample point {points[np.argmax(bad)]!r}")


def integrate(spec: DomainSpec, integrand: Callable[[np.ndarray], np.ndarray], plan: IntegrationPlan | None = None,
              seed: int | None = None) -> IntegralEstimate:
    """Monte Carlo estimate of ``int_spec integrand`` with its standard error.

    ``integrand`` maps an ``(N, n)`` array of points to ``N`` values.
    """
    plan = plan or IntegrationPlan()
    if seed is not None:
        plan = IntegrationPlan(plan.samples, seed, plan.strata, plan.threads)

    def partial(ss: SampleSet):
        vals = np.asarray(integrand(ss.points))
        _check_finite(vals, ss.points)
        y = ss.weights * vals
        return np.sum(y), np.sum(np.abs(y) ** 2), ss.proposals

    parts = map_reduce(spec, plan, partial)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    N = sum(p[2] for p in parts)
    mean = total / N
    var = max(total_sq / N - abs(mean) ** 2, 0.0) * N / (N - 1)
    value = complex(mean) if np.iscomplexobj(mean) else float(mean)
    return IntegralEstimate(value, float(np.sqrt(var / N)), N, plan.seed)


def gram_matrix(spec: DomainSpec, basis: Callable[[np.ndarray], np.ndarray], plan: IntegrationPlan) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo ``G_jk = int phi_j conj(phi_k)`` and entrywise standard errors.

    ``basis`` maps ``(N, n)`` points to an ``(N, m)`` matrix of basis values.
    """

    def partial(ss: SampleSet):
        phi = basis(ss.points)
        _check_finite(phi, ss.points)
        wphi = phi * ss.weights[:, None]
        outer = wphi.T @ phi.conj()
        sq = (np.abs(wphi) ** 2).T @ (np.abs(phi) ** 2)
        return outer, sq, ss.proposals

    parts = map_reduce(spec, plan, partial)
    N = sum(p[2] for p in parts)
    G = sum(p[0] for p in parts) / N
    second = sum(p[1] for p in parts) / N
    var = np.maximum(second - np.abs(G) ** 2, 0.0) * N / (N - 1)
    return G, np.sqrt(var / N)
