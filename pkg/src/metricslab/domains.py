"""Catalog of model domains, their defining functions and structural maps.

Every domain is ``{z : rho(z) < 0}`` for the defining function returned by
:func:`eval_defining`. Points are complex arrays whose last axis holds the
coordinates, so all evaluators accept a single point or a batch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Union

import numpy as np

from .calculus import levi_form
from .polynomial import HermitianPolynomial, WeightSignature, fornaess_polynomial, hkn_polynomial


# ---------------------------------------------------------------------------
# Domain specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WBGraph:
    """``{Re z_n + P(z') < 0}``."""

    P: HermitianPolynomial
    weights: WeightSignature
    s: float | None = None

    def __post_init__(self):
        if len(self.weights) != self.P.k:
            raise ValueError(f"{len(self.weights)} weights for a polynomial on C^{self.P.k}")
        if self.s is not None and self.s <= 0:
            raise ValueError("bumping constant s must be positive")

    @property
    def n(self) -> int:
        return self.P.k + 1

    def rho(self, z):
        return z[..., -1].real + self.P(z[..., :-1])


@dataclass(frozen=True)
class KohnNirenberg:
    """``{Re w + |zw|^2 + |z|^8 + (15/7)|z|^2 Re z^6 < 0}``."""

    n: int = field(default=2, init=False)

    def rho(self, z):
        zz, w = z[..., 0], z[..., 1]
        return w.real + np.abs(zz * w) ** 2 + hkn_polynomial()(z[..., :1])


@dataclass(frozen=True)
class Fornaess:
    """``{Re w + |zw|^2 + |z|^6 + t |z|^2 Re z^4 < 0}`` with ``1 < t < 9/5``."""

    t: float
    n: int = field(default=2, init=False)

    def __post_init__(self):
        if not 1 < self.t < 9 / 5:
            raise ValueError(f"Fornaess parameter must satisfy 1 < t < 9/5, got {self.t}")

    def rho(self, z):
        zz, w = z[..., 0], z[..., 1]
        return w.real + np.abs(zz * w) ** 2 + fornaess_polynomial(self.t)(z[..., :1])


@dataclass(frozen=True)
class ExpGraph:
    """``{Re w + exp(|z|^2) < 0}`` (infinite volume)."""

    n: int = field(default=2, init=False)

    def rho(self, z):
        return z[..., 1].real + np.exp(np.abs(z[..., 0]) ** 2)


@dataclass(frozen=True)
class Egg:
    """``{|w|^2 < exp(-kappa |z|^2)}``; contains the line ``{w = 0}``."""

    kappa: float = 1.0
    n: int = field(default=2, init=False)

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("Egg kappa must be positive")

    def rho(self, z):
        return np.abs(z[..., 1]) ** 2 - np.exp(-self.kappa * np.abs(z[..., 0]) ** 2)


@dataclass(frozen=True)
class Ball:
    n: int
    center: tuple[complex, ...] | None = None
    radius: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")
        c = (0j,) * self.n if self.center is None else tuple(complex(x) for x in self.center)
        if len(c) != self.n:
            raise ValueError("ball center has the wrong dimension")
        object.__setattr__(self, "center", c)

    def rho(self, z):
        d = z - np.asarray(self.center)
        return np.sum(np.abs(d) ** 2, axis=-1) - self.radius**2


@dataclass(frozen=True)
class Polydisc:
    radii: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if any(r <= 0 for r in self.radii):
            raise ValueError("polydisc radii must be positive")

    @property
    def n(self) -> int:
        return len(self.radii)

    def rho(self, z):
        r = np.asarray(self.radii)
        return np.max(np.abs(z) ** 2 / r**2, axis=-1) - 1.0


@dataclass(frozen=True)
class Truncated:
    """``inner`` intersected with the ball ``{||z|| < R}``."""

    inner: "DomainSpec"
    R: float

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("truncation radius must be positive")

    @property
    def n(self) -> int:
        return self.inner.n

    def rho(self, z):
        return np.maximum(self.inner.rho(z), np.sum(np.abs(z) ** 2, axis=-1) - self.R**2)


@dataclass(frozen=True)
class Bumped:
    """Enlarged neighborhood ``{rho < eps}`` of ``inner`` (sampling region only)."""

    inner: "DomainSpec"
    eps: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("bump size eps must be positive")

    @property
    def n(self) -> int:
        return self.inner.n

    def rho(self, z):
        base = self.inner.rho(z)
        if isinstance(self.inner, ExpGraph):
            return base - self.eps * np.exp(np.abs(z[..., 0]) ** 2) - self.eps
        return base - self.eps


DomainSpec = Union[WBGraph, KohnNirenberg, Fornaess, ExpGraph, Egg, Ball, Polydisc, Truncated, Bumped]
BOUNDED = (Ball, Polydisc, Truncated)


def disc(radius: float = 1.0) -> Ball:
    return Ball(1, radius=radius)


def hkn_domain(s: float | None = None) -> WBGraph:
    return WBGraph(hkn_polynomial(), WeightSignature((4,)), s)


def fornaess_homogeneous_domain(t: float, s: float | None = None) -> WBGraph:
    if not 1 < t < 9 / 5:
        raise ValueError(f"Fornaess parameter must satisfy 1 < t < 9/5, got {t}")
    return WBGraph(fornaess_polynomial(t), WeightSignature((3,)), s)


def half_plane() -> WBGraph:
    """``{Re z_1 < 0}`` in C^1, as a graph domain with empty ``P``."""
    return WBGraph(HermitianPolynomial(0), WeightSignature(()))


def is_bounded(spec: DomainSpec) -> bool:
    return isinstance(spec, BOUNDED)


def _check_points(spec: DomainSpec, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0 or z.shape[-1] != spec.n:
        raise ValueError(f"point of dimension {z.shape[-1] if z.ndim else 0} for a domain in C^{spec.n}")
    return z


def eval_defining(spec: DomainSpec, z) -> np.ndarray:
    """Defining value ``rho(z)``; negative exactly on the interior."""
    z = _check_points(spec, z)
    return np.asarray(spec.rho(z), dtype=float)


def contains(spec: DomainSpec, z) -> np.ndarray:
    if isinstance(spec, Egg):
        # log form: exp(-kappa |z|^2) underflows long before the fiber closes
        z = _check_points(spec, z)
        with np.errstate(divide="ignore"):
            return 2 * np.log(np.abs(z[..., 1])) + spec.kappa * np.abs(z[..., 0]) ** 2 < 0
    return eval_defining(spec, z) < 0


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

_ALLOWED = {"type", "n", "weights", "s", "t", "kappa", "R", "eps", "P", "inner", "center", "radius", "radii"}


class SpecError(ValueError):
    """Malformed domain-spec JSON; ``location`` names the offending field."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


def spec_from_dict(d: dict[str, Any], location: str = "$") -> DomainSpec:
    if not isinstance(d, dict):
        raise SpecError("domain spec must be an object", location)
    unknown = set(d) - _ALLOWED
    if unknown:
        raise SpecError(f"unknown fields {sorted(unknown)}", location)
    kind = d.get("type")
    n = d.get("n")
    try:
        if kind == "wb":
            weights = WeightSignature(tuple(d["weights"]))
            P = HermitianPolynomial.from_json(len(weights), d.get("P", []))
            spec = WBGraph(P, weights, d.get("s"))
        elif kind == "kn":
            spec = KohnNirenberg()
        elif kind == "fornaess":
            spec = Fornaess(float(d["t"]))
        elif kind == "exp_graph":
            spec = ExpGraph()
        elif kind == "egg":
            spec = Egg(float(d.get("kappa", 1.0)))
        elif kind == "ball":
            spec = Ball(int(n), d.get("center"), float(d.get("radius", 1.0)))
        elif kind == "polydisc":
            radii = d.get("radii") or [1.0] * int(n)
            spec = Polydisc(tuple(radii))
        elif kind == "truncated":
            spec = Truncated(spec_from_dict(d["inner"], location + ".inner"), float(d["R"]))
        elif kind == "bumped":
            spec = Bumped(spec_from_dict(d["inner"], location + ".inner"), float(d["eps"]))
        else:
            raise SpecError(f"unknown domain type {kind!r}", location + ".type")
    except KeyError as exc:
        raise SpecError(f"missing field {exc.args[0]!r}", location) from None
    except SpecError:
        raise
    except (TypeError, ValueError) as exc:
        raise SpecError(str(exc), location) from None
    if n is not None and int(n) != spec.n:
        raise SpecError(f"declared n={n} but domain lives in C^{spec.n}", location + ".n")
    return spec


def spec_to_dict(spec: DomainSpec) -> dict[str, Any]:
    if isinstance(spec, WBGraph):
        d = {"type": "wb", "weights": list(spec.weights.m), "P": spec.P.to_json()}
        if spec.s is not None:
            d["s"] = spec.s
    elif isinstance(spec, KohnNirenberg):
        d = {"type": "kn"}
    elif isinstance(spec, Fornaess):
        d = {"type": "fornaess", "t": spec.t}
    elif isinstance(spec, ExpGraph):
        d = {"type": "exp_graph"}
    elif isinstance(spec, Egg):
        d = {"type": "egg", "kappa": spec.kappa}
    elif isinstance(spec, Ball):
        d = {"type": "ball", "radius": spec.radius}
        if any(spec.center):
            d["center"] = [[c.real, c.imag] for c in spec.center]
    elif isinstance(spec, Polydisc):
        d = {"type": "polydisc", "radii": list(spec.radii)}
    elif isinstance(spec, Truncated):
        d = {"type": "truncated", "inner": spec_to_dict(spec.inner), "R": spec.R}
    elif isinstance(spec, Bumped):
        d = {"type": "bumped", "inner": spec_to_dict(spec.inner), "eps": spec.eps}
    else:
        raise TypeError(f"not a domain spec: {spec!r}")
    d["n"] = spec.n
    return d


def load_spec(path) -> DomainSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    if isinstance(data, dict) and "center" in data and data["center"] is not None:
        data = dict(data)
        data["center"] = [complex(*c) if isinstance(c, list) else complex(c) for c in data["center"]]
    return spec_from_dict(data)


# ---------------------------------------------------------------------------
# Structural checks for weighted-homogeneous polynomials
# ---------------------------------------------------------------------------


@dataclass
class HomogeneityReport:
    ok: bool
    offending: list
    max_scaling_error: float


def check_weighted_homogeneity(
    P: HermitianPolynomial, w: WeightSignature, n_checks: int = 50, seed: int = 0
) -> HomogeneityReport:
    if len(w) != P.k:
        raise ValueError(f"{len(w)} weights for a polynomial on C^{P.k}")
    degrees = P.degree_weights(w.m)
    offending = [term for term, deg in degrees.items() if deg != Fraction(1)]
    rng = np.random.default_rng(seed)
    worst = 0.0
    if P.k:
        z = rng.normal(size=(n_checks, P.k)) + 1j * rng.normal(size=(n_checks, P.k))
        t = 10.0 ** rng.uniform(-3, 3, size=n_checks)
        scaled = z * t[:, None] ** (1.0 / (2.0 * np.asarray(w.m)))
        lhs = P(scaled)
        rhs = t * P(z)
        scale = t * _abs_term_sum(P, z)
        worst = float(np.max(np.abs(lhs - rhs) / np.where(scale > 0, scale, 1.0)))
    ok = not offending and worst <= 1e-9
    return HomogeneityReport(ok, offending, worst)


def _abs_term_sum(P: HermitianPolynomial, z) -> np.ndarray:
    """``sum |c| |z^a zbar^b|``, the natural scale for relative comparisons of P."""
    absP = HermitianPolynomial(P.k, {t: abs(c) for t, c in P.terms.items()})
    a = np.abs(np.asarray(z, dtype=complex))
    return absP(a)


def detect_pluriharmonic_terms(P: HermitianPolynomial) -> list:
    return P.pure_terms()


def bumping_polynomial(P: HermitianPolynomial, w: WeightSignature, s: float) -> HermitianPolynomial:
    """``P - 2 s sum_j |z_j|^(2 m_j)``."""
    reserve = sum((HermitianPolynomial.abs_power(P.k, j, m) for j, m in enumerate(w.m)), HermitianPolynomial(P.k))
    return P - 2.0 * s * reserve


def levi_samples(k: int, count: int, seed: int = 0, r_min: float = 0.1, r_max: float = 2.0) -> np.ndarray:
    """Points of C^k with uniformly random directions and radii in ``[r_min, r_max]``."""
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(count, k)) + 1j * rng.normal(size=(count, k))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.uniform(r_min, r_max, size=(count, 1))


@dataclass
class BumpingReport:
    ok: bool
    s: float
    min_eigenvalue: float
    worst_point: np.ndarray


def check_bumping(
    P: HermitianPolynomial, w: WeightSignature, s: float, samples=10_000, seed: int = 0, tol: float = 1e-9
) -> BumpingReport:
    """Sampled plurisubharmonicity of ``P - 2 s sum |z_j|^(2 m_j)``."""
    if s <= 0:
        raise ValueError("s must be positive")
    pts = levi_samples(P.k, samples, seed) if np.isscalar(samples) else np.asarray(samples, dtype=complex)
    Q = bumping_polynomial(P, w, s)
    L = levi_form(Q, pts).matrix
    eig = np.linalg.eigvalsh(L)[..., 0]
    worst = int(np.argmin(eig))
    return BumpingReport(bool(eig[worst] >= -tol), float(s), float(eig[worst]), pts[worst])


def find_bumping_constant(
    P: HermitianPolynomial, w: WeightSignature, samples=10_000, seed: int = 0, s_hi: float = 1.0, tol: float = 1e-10
) -> float:
    """Largest ``s`` passing :func:`check_bumping` on the sample set, by bisection (0 if none)."""
    pts = levi_samples(P.k, samples, seed) if np.isscalar(samples) else np.asarray(samples, dtype=complex)
    while check_bumping(P, w, s_hi, pts).ok:
        s_hi *= 2
        if s_hi > 1e6:
            return np.inf
    lo, hi = 0.0, s_hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if check_bumping(P, w, mid, pts).ok:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class AdmissionReport:
    homogeneity: HomogeneityReport
    pluriharmonic_terms: list
    s: float
    bumping: BumpingReport | None
    min_P_minus_reserve: float
    nonnegative: bool

    @property
    def ok(self) -> bool:
        return (
            self.homogeneity.ok
            and not self.pluriharmonic_terms
            and self.bumping is not None
            and self.bumping.ok
        )


def admit_wb(spec: WBGraph, samples: int = 10_000, seed: int = 0) -> AdmissionReport:
    """Run every WB-domain structure check; the bumping constant is searched when not stored.

    Also records whether ``P >= 2 s sum |z_j|^(2 m_j)`` on the samples; graph
    domains failing it are not contained in the half-space ``{Re z_n < 0}``.
    """
    P, w = spec.P, spec.weights
    hom = check_weighted_homogeneity(P, w, seed=seed)
    pure = detect_pluriharmonic_terms(P)
    pts = levi_samples(P.k, samples, seed)
    s = spec.s if spec.s is not None else find_bumping_constant(P, w, pts)
    bump = check_bumping(P, w, s, pts) if s > 0 and np.isfinite(s) else None
    reserve_gap = bumping_polynomial(P, w, s if np.isfinite(s) else 0.0)(pts) if P.k else np.zeros(1)
    gap = float(np.min(reserve_gap))
    return AdmissionReport(hom, pure, float(s), bump, gap, gap >= 0)


# ---------------------------------------------------------------------------
# Homothety, covering and homogenization
# ---------------------------------------------------------------------------


def homothety(w: WeightSignature, t: float, z) -> np.ndarray:
    """``(t^(1/2m_1) z_1, ..., t^(1/2m_k) z_k, t z_n)``."""
    if t <= 0:
        raise ValueError("homothety parameter must be positive")
    z = np.asarray(z, dtype=complex)
    factors = np.append(float(t) ** (1.0 / (2.0 * np.asarray(w.m, dtype=float))), float(t))
    return z * factors


def covering_map(w: WeightSignature, z) -> np.ndarray:
    """``F_H(z) = (z_1^mu_1, ..., z_k^mu_k, z_n)``."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z[..., :-1] ** np.asarray(w.mu), z[..., -1:]], axis=-1)


def build_H_from_P(P: HermitianPolynomial, w: WeightSignature) -> HermitianPolynomial:
    """Homogeneous ``H(z) = P(z_1^mu_1, ...)`` of degree ``2 prod m``."""
    report = check_weighted_homogeneity(P, w)
    if report.offending:
        raise ValueError(f"P is not weighted-homogeneous for {w.m}: offending terms {report.offending}")
    mu = w.mu
    terms = {
        (tuple(a * m for a, m in zip(alpha, mu)), tuple(b * m for b, m in zip(beta, mu))): c
        for (alpha, beta), c in P.terms.items()
    }
    return HermitianPolynomial(P.k, terms)


def homogenized_domain(spec: WBGraph) -> WBGraph:
    """``Omega_H``, the homogeneous model covering ``spec`` through ``F_H``."""
    H = build_H_from_P(spec.P, spec.weights)
    return WBGraph(H, WeightSignature((spec.weights.k,) * spec.P.k))


# ---------------------------------------------------------------------------
# Interior probe points
# ---------------------------------------------------------------------------


def _random_complex(rng, shape, radius):
    """Complex numbers with uniform argument and log-uniform modulus in ``[1e-3, radius]``."""
    r = np.exp(rng.uniform(np.log(1e-3), np.log(radius), size=shape))
    return r * np.exp(2j * np.pi * rng.uniform(size=shape))


def _depths(rng, size, scale):
    """Distances inside the boundary, log-uniform in ``[1e-9, scale]``."""
    return np.exp(rng.uniform(np.log(1e-9), np.log(scale), size=size))


def interior_points(spec: DomainSpec, count: int, seed: int = 0, radius: float = 10.0) -> np.ndarray:
    """Seeded interior points, concentrated both near the boundary and far out.

    Used for sampled checks (disc-valuedness of candidate maps, peak-function
    shells), not for quadrature. Every returned point satisfies ``rho < 0``.
    """
    rng = np.random.default_rng(seed)
    pts = _interior_raw(spec, count, rng, radius)
    pts = pts[contains(spec, pts)]
    tries = 0
    while len(pts) < count and tries < 20:
        more = _interior_raw(spec, count, rng, radius)
        pts = np.concatenate([pts, more[contains(spec, more)]])
        tries += 1
    return pts[:count]


@dataclass
class InclusionReport:
    ok: bool
    samples: int
    witness: np.ndarray | None


def sampled_inclusion(inner: DomainSpec, outer: DomainSpec, count: int = 10_000, seed: int = 0,
                      radius: float = 10.0) -> InclusionReport:
    """Evidence for ``inner`` contained in ``outer``: every sampled interior point of ``inner`` lies in ``outer``.

    Not a certificate; a failure returns the first point of ``inner`` outside ``outer``.
    """
    if inner.n != outer.n:
        raise ValueError(f"dimension mismatch: C^{inner.n} and C^{outer.n}")
    pts = interior_points(inner, count, seed=seed, radius=radius)
    bad = ~contains(outer, pts)
    return InclusionReport(not bad.any(), len(pts), pts[int(np.argmax(bad))] if bad.any() else None)


def _interior_raw(spec: DomainSpec, count: int, rng, radius: float) -> np.ndarray:
    n = spec.n
    if isinstance(spec, Ball):
        g = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        half = count // 2
        r = np.concatenate([rng.uniform(size=half) ** (1 / (2 * n)), 1 - _depths(rng, count - half, 0.5)])
        return np.asarray(spec.center) + spec.radius * g * r[:, None]
    if isinstance(spec, Polydisc):
        rr = np.asarray(spec.radii)
        u = rng.uniform(size=(count, n))
        r = np.where(u < 0.5, np.sqrt(rng.uniform(size=(count, n))), 1 - _depths(rng, (count, n), 0.5))
        return rr * r * np.exp(2j * np.pi * rng.uniform(size=(count, n)))
    if isinstance(spec, WBGraph):
        zp = _random_complex(rng, (count, spec.P.k), radius ** (1 / 8) + 1.0)
        depth = _depths(rng, count, radius)
        re_w = -spec.P(zp) - depth
        im_w = rng.uniform(-radius, radius, size=count)
        return np.concatenate([zp, (re_w + 1j * im_w)[:, None]], axis=1)
    if isinstance(spec, (KohnNirenberg, Fornaess)):
        Pz = hkn_polynomial() if isinstance(spec, KohnNirenberg) else fornaess_polynomial(spec.t)
        z = _random_complex(rng, count, 2.0)
        y = rng.uniform(-radius, radius, size=count)
        a = np.abs(z) ** 2
        c = a * y**2 + Pz(z[:, None])
        # x + a x^2 + c < 0  on  (x_lo, x_hi)
        with np.errstate(invalid="ignore", divide="ignore"):
            disc_ = np.sqrt(np.maximum(1 - 4 * a * c, 0))
            x_hi = np.where(a > 1e-14, (-1 + disc_) / (2 * np.where(a > 0, a, 1)), -c)
            x_lo = np.where(a > 1e-14, (-1 - disc_) / (2 * np.where(a > 0, a, 1)), -c - radius)
        width = np.maximum(x_hi - x_lo, 0)
        depth = np.minimum(_depths(rng, count, radius), 0.5 * width)
        x = np.where(rng.uniform(size=count) < 0.5, x_hi - depth, x_lo + depth)
        return np.stack([z, x + 1j * y], axis=1)
    if isinstance(spec, ExpGraph):
        z = _random_complex(rng, count, 2.0)
        re_w = -np.exp(np.abs(z) ** 2) - _depths(rng, count, radius)
        return np.stack([z, re_w + 1j * rng.uniform(-radius, radius, size=count)], axis=1)
    if isinstance(spec, Egg):
        z = _random_complex(rng, count, radius)
        fiber = np.exp(-spec.kappa * np.abs(z) ** 2 / 2)
        frac = np.where(rng.uniform(size=count) < 0.5, np.sqrt(rng.uniform(size=count)), 1 - _depths(rng, count, 0.5))
        w = fiber * frac * np.exp(2j * np.pi * rng.uniform(size=count))
        return np.stack([z, w], axis=1)
    if isinstance(spec, Truncated):
        inner = _interior_raw(spec.inner, 4 * count, rng, spec.R)
        inner = inner[np.linalg.norm(inner, axis=1) < spec.R]
        ball = _interior_raw(Ball(n, radius=spec.R), count, rng, spec.R)
        return np.concatenate([inner[: count // 2], ball])
    if isinstance(spec, Bumped):
        return _interior_raw(spec.inner, count, rng, radius)
    raise TypeError(f"no probe sampler for {type(spec).__name__}")
