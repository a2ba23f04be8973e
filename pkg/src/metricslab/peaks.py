"""Sampled peak-function verification and the peak-function combinators.

Every check here is evidence on samples, not a proof: each report carries the
witness points that decided it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .domains import DomainSpec, contains, eval_defining, interior_points, is_bounded
from .expressions import Const, Coord, Expr, Mul, Pow, exp
from .polynomial import WeightSignature

UNCHECKED_HYPOTHESES = ("constant r3", "U is Stein")


class AssemblyRefused(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


def _evaluate(f, z) -> np.ndarray:
    return np.asarray(f(np.asarray(z, dtype=complex)), dtype=complex)


@dataclass
class PeakCandidate:
    f: Expr | Callable
    p: np.ndarray
    spec: DomainSpec

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=complex)

    def __call__(self, z):
        return _evaluate(self.f, z)


@dataclass
class Failure:
    condition: str
    witness: np.ndarray
    value: float
    detail: str = ""


@dataclass
class PeakReport:
    ok: bool
    shell_margins: dict
    limit_errors: np.ndarray
    far_sup: dict
    failures: list[Failure] = field(default_factory=list)

    def failed(self, condition: str) -> bool:
        return any(f.condition == condition for f in self.failures)


def inward_normal(spec: DomainSpec, p, h: float = 1e-6) -> np.ndarray:
    """Unit inward normal at a boundary point from a central difference of ``rho``."""
    p = np.asarray(p, dtype=complex)
    n = p.shape[-1]
    steps = np.concatenate([np.eye(n), 1j * np.eye(n)]) * h
    pts = np.concatenate([p + steps, p - steps])
    r = eval_defining(spec, pts)
    g = (r[: 2 * n] - r[2 * n:]) / (2 * h)
    grad = g[:n] + 1j * g[n:]
    norm = np.linalg.norm(grad)
    if not norm > 0:
        raise ValueError(f"defining function has vanishing gradient at {p!r}")
    return -grad / norm


def verify_peak(cand: PeakCandidate, radii=(0.5, 0.2, 0.1), samples: int = 4000, seed: int = 0,
                tol: float = 1e-6, tol_s: float = 1e-6, far_cutoff: float = 1e3) -> PeakReport:
    """Sample the three peak-function conditions at ``cand.p``.

    ``modulus``: ``|f| < 1`` on interior samples. ``limit``: ``|f - 1|``
    decreases below ``tol`` along the inward normal ``p + 10^-j n``.
    ``separation``: ``1 - sup |f|`` over samples with ``||z - p|| >= r`` exceeds
    ``tol_s`` for every ``r`` in ``radii``. Unbounded domains add far samples
    up to ``far_cutoff`` and report the sup of ``|f|`` per decade of ``||z||``.
    """
    spec, p = cand.spec, cand.p
    pts = interior_points(spec, samples, seed=seed)
    far_sup = {}
    if not is_bounded(spec):
        far = interior_points(spec, samples, seed=seed + 1, radius=far_cutoff)
        pts = np.concatenate([pts, far])
    vals = np.abs(cand(pts))
    failures: list[Failure] = []

    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        failures.append(Failure("finite", pts[i], float("nan"), "candidate is not finite"))
        vals = np.where(bad, np.inf, vals)
    over = vals >= 1
    if over.any():
        i = int(np.argmax(np.where(over, vals, -np.inf)))
        failures.append(Failure("modulus", pts[i], float(vals[i]), "|f| >= 1 at an interior sample"))

    seq = p + np.power(10.0, -np.arange(1, 11))[:, None] * inward_normal(spec, p)
    seq = seq[contains(spec, seq)]
    errs = np.abs(cand(seq) - 1) if len(seq) else np.array([np.inf])
    if len(seq) < 3:
        failures.append(Failure("limit", p, float("nan"), "fewer than three interior points on the normal"))
    elif not (errs[-1] < tol and errs[-1] <= errs[0]):
        failures.append(Failure("limit", seq[-1], float(errs[-1]), f"|f - 1| = {errs[-1]:.3g} near p"))

    dist = np.linalg.norm(pts - p, axis=1)
    margins = {}
    for r in radii:
        shell = dist >= r
        if not shell.any():
            margins[r] = float("nan")
            continue
        i = int(np.argmax(np.where(shell, vals, -np.inf)))
        margins[r] = float(1 - vals[i])
        if not margins[r] > tol_s:
            failures.append(Failure("separation", pts[i], float(vals[i]),
                                    f"sup |f| on the shell ||z - p|| >= {r} is {vals[i]:.12g}"))

    if not is_bounded(spec):
        norms = np.linalg.norm(pts, axis=1)
        decade = 1.0
        while decade < far_cutoff:
            sel = (norms >= decade) & (norms < 10 * decade)
            if sel.any():
                far_sup[decade] = float(vals[sel].max())
            decade *= 10
    return PeakReport(not failures, margins, errs, far_sup, failures)


# ---------------------------------------------------------------------------
# Localization hypotheses
# ---------------------------------------------------------------------------


@dataclass
class SeparationReport:
    ok: bool
    min_distance: float
    witness: np.ndarray | None
    samples: int
    unchecked: tuple = UNCHECKED_HYPOTHESES


def _annulus(rng, p, r1, r2, count):
    n = p.shape[-1]
    g = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    d = 2 * n
    u = rng.uniform(size=count)
    r = (r1**d + u * (r2**d - r1**d)) ** (1.0 / d)
    # put a tenth of the samples on each bounding sphere
    k = count // 10
    r[:k], r[k:2 * k] = r1, r2
    return p + g * r[:, None]


def check_support_separation(g, spec: DomainSpec, p, r1: float, r2: float, U: DomainSpec, eps: float,
                             samples: int = 20000, seed: int = 0) -> SeparationReport:
    """``min |g - 1|`` over samples of ``{r1 <= ||z - p|| <= r2}`` inside ``U``; pass iff ``>= eps``."""
    if not 0 <= r1 < r2:
        raise ValueError("need 0 <= r1 < r2")
    p = np.asarray(p, dtype=complex)
    pts = _annulus(np.random.default_rng(seed), p, r1, r2, samples)
    pts = pts[contains(U, pts)]
    if not len(pts):
        return SeparationReport(True, float("inf"), None, 0)
    d = np.abs(_evaluate(g, pts) - 1)
    d = np.where(np.isfinite(d), d, np.inf)
    i = int(np.argmin(d))
    return SeparationReport(bool(d[i] >= eps), float(d[i]), pts[i], len(pts))


@dataclass
class DecayReport:
    ok: bool
    skipped: bool
    worst_ratio: float
    witness: np.ndarray | None
    C0: float
    samples: int
    max_norm: float
    unchecked: tuple = UNCHECKED_HYPOTHESES


def boundary_distance(U: DomainSpec, pts: np.ndarray, rays: int = 16, seed: int = 0,
                      steps: int = 30, grid: int = 16, chunk: int = 4096) -> np.ndarray:
    """Upper estimate of ``min(1, dist(z, C^n \\ U))`` by bisection along random rays.

    Each ray is scanned on ``grid`` points of ``(0, 1]`` for its first exit,
    then the exit is refined by bisection.
    """
    pts = np.asarray(pts, dtype=complex)
    n = pts.shape[-1]
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(rays, n)) + 1j * rng.normal(size=(rays, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    ts = np.linspace(1.0 / grid, 1.0, grid)
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        z = pts[s:s + chunk]
        m = len(z)
        # (m, rays, grid, n)
        probe = z[:, None, None, :] + ts[None, None, :, None] * dirs[None, :, None, :]
        inside = contains(U, probe)
        outside = ~inside
        has_exit = outside.any(axis=2)
        first = np.argmax(outside, axis=2)
        hi = np.where(has_exit, ts[first], 1.0)
        lo = np.where(has_exit, np.where(first > 0, ts[np.maximum(first - 1, 0)], 0.0), 1.0)
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            q = z[:, None, :] + mid[..., None] * dirs[None, :, :]
            inn = contains(U, q)
            lo = np.where(inn, mid, lo)
            hi = np.where(inn, hi, mid)
        out[s:s + m] = np.minimum(hi.min(axis=1), 1.0)
    return out


def check_decay(h, spec: DomainSpec, U: DomainSpec, C0: float, samples: int = 100_000, seed: int = 0,
                radius: float = 10.0, rays: int = 16) -> DecayReport:
    """Sample ``|h|^2 <= C0 delta_U^(2n) / (1 + ||z||^2)^2`` on ``spec``.

    Bounded domains need no decay hypothesis and are skipped.
    """
    if is_bounded(spec):
        return DecayReport(True, True, 0.0, None, C0, 0, 0.0)
    pts = interior_points(spec, samples, seed=seed, radius=radius)
    n = spec.n
    delta = boundary_distance(U, pts, rays=rays, seed=seed)
    norm2 = np.sum(np.abs(pts) ** 2, axis=1)
    hv = np.abs(_evaluate(h, pts)) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = hv * (1 + norm2) ** 2 / delta ** (2 * n)
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    i = int(np.argmax(ratio))
    return DecayReport(bool(ratio[i] <= C0), False, float(ratio[i]), pts[i], C0, len(pts),
                       float(np.sqrt(norm2.max())))


# ---------------------------------------------------------------------------
# Combinators
# ---------------------------------------------------------------------------


class Symmetrized(Expr):
    """``Q(z) = prod over twists of Q_H(zeta^k z^(1/mu), z_n)``.

    ``evaluate`` picks the principal preimage, optionally rotated by
    ``branch`` root-of-unity steps; ``expr`` is the same product as an
    expression tree, used for derivatives and JSON.
    """

    def __init__(self, Q_H: Expr, weights: WeightSignature):
        self.Q_H = Q_H
        self.weights = weights
        mu = weights.mu
        self.twists = list(itertools.product(*[range(m) for m in mu]))
        factors = []
        for k in self.twists:
            mapping = {
                j: Mul((Const(np.exp(2j * np.pi * kj / m)), Pow(Coord(j), Fraction(1, m))))
                for j, (kj, m) in enumerate(zip(k, mu))
                if m > 1
            }
            factors.append(Q_H.substitute(mapping))
        self.expr = factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def preimage(self, z, branch: int = 0) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        mu = np.asarray(self.weights.mu, dtype=float)
        head = z[..., :-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            roots = np.where(head == 0, 0, np.exp(np.log(head) / mu))
        roots = roots * np.exp(2j * np.pi * branch / mu)
        return np.concatenate([roots, z[..., -1:]], axis=-1)

    def product_over_twists(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        mu = np.asarray(self.weights.mu, dtype=float)
        out = np.ones(w.shape[:-1], dtype=complex)
        for k in self.twists:
            rot = np.append(np.exp(2j * np.pi * np.asarray(k) / mu), 1.0)
            out = out * self.Q_H(w * rot)
        return out

    def evaluate(self, z, branch: int = 0):
        return self.product_over_twists(self.preimage(z, branch))

    def diff(self, j):
        return self.expr.diff(j)

    def substitute(self, mapping):
        return self.expr.substitute(mapping)

    def to_json(self):
        return self.expr.to_json()

    def branch_deviation(self, z) -> float:
        """Largest change of ``Q(z)`` when every preimage coordinate is moved to the next root."""
        a = self.evaluate(np.asarray(z, dtype=complex))
        b = self.evaluate(np.asarray(z, dtype=complex), branch=1)
        return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))


def symmetrize(Q_H: Expr, weights: WeightSignature, check_points=None, tol: float = 1e-10) -> Symmetrized:
    """Descend ``Q_H`` from the homogeneous model through the covering ``F_H``.

    When ``check_points`` are given, branch independence is asserted there.
    """
    Q = Symmetrized(Q_H, weights)
    if check_points is not None:
        dev = Q.branch_deviation(check_points)
        if dev > tol:
            raise ValueError(f"symmetrized function depends on the branch (deviation {dev:.3g})")
    return Q


@dataclass
class AssemblyReport:
    max_modulus: float
    max_real_part: float
    samples: int


def assemble_peak(psi: Expr, h: Expr | None = None, u: Expr | None = None, c: float = 1.0,
                  spec: DomainSpec | None = None, samples: int = 4000, seed: int = 0,
                  points=None) -> tuple[Expr, AssemblyReport]:
    """``f = exp(1 / (-c (psi - h u) - 1))`` with its preconditions sampled.

    Requires ``c |h u| < 1/2`` and ``Re(c psi) >= 0`` at every sample; the
    result has ``Re(1 / (-c (psi - h u) - 1)) < 0`` there, so ``|f| < 1``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    h = Const(1.0) if h is None else h
    u = Const(0.0) if u is None else u
    if points is None:
        if spec is None:
            raise ValueError("either spec or points is required")
        points = interior_points(spec, samples, seed=seed)
    points = np.asarray(points, dtype=complex)

    hu = c * np.abs(h(points) * u(points))
    if np.any(~(hu < 0.5)):
        i = int(np.argmax(np.where(np.isfinite(hu), hu, np.inf)))
        raise AssemblyRefused(f"c|h u| = {hu[i]:.6g} >= 1/2", points[i])
    re = (c * psi(points)).real
    if np.any(~(re >= 0)):
        i = int(np.argmin(np.where(np.isfinite(re), re, -np.inf)))
        raise AssemblyRefused(f"Re(c psi) = {re[i]:.6g} < 0", points[i])

    inner = (-c * (psi - h * u) - 1) ** -1
    f = exp(inner)
    re_inner = inner(points).real
    if np.any(~(re_inner < 0)):
        i = int(np.argmax(np.where(np.isfinite(re_inner), re_inner, np.inf)))
        raise AssemblyRefused(f"exponent has real part {re_inner[i]:.6g} >= 0", points[i])
    mod = np.abs(f(points))
    return f, AssemblyReport(float(mod.max()), float(re_inner.max()), len(points))
