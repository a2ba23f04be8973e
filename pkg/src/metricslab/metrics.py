"""Carathéodory lower bounds, Kobayashi upper bounds and related distances.

Convention: the unit disc carries the infinitesimal metric ``|dz| / (1 - |z|^2)``,
so the Carathéodory length of ``v`` at the origin of the disc is ``|v|`` and
the Poincaré distance is ``atanh`` of the Möbius pseudo-distance.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bergman import UndefinedBergmanForm, bergman_form
from .domains import (
    Ball,
    Bumped,
    DomainSpec,
    Egg,
    Polydisc,
    Truncated,
    WBGraph,
    contains,
    homothety,
    interior_points,
)
from .expressions import Expr


class CandidateDisqualified(ValueError):
    pass


class EmptyFamily(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------------------
# Poincaré disc
# ---------------------------------------------------------------------------


def poincare_distance(a, b) -> float:
    a, b = complex(a), complex(b)
    if abs(a) >= 1 or abs(b) >= 1:
        raise ValueError(f"points {a}, {b} must lie in the open unit disc")
    return float(np.arctanh(abs(a - b) / abs(1 - np.conj(a) * b)))


def mobius(a: complex) -> Callable:
    """Disc automorphism ``z -> (z - a) / (1 - conj(a) z)``."""
    return lambda z: (z - a) / (1 - np.conj(a) * z)


# ---------------------------------------------------------------------------
# Candidate maps into the disc
# ---------------------------------------------------------------------------


@dataclass
class Candidate:
    """Holomorphic map into the unit disc with its holomorphic gradient."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def from_expr(cls, name: str, expr: Expr) -> "Candidate":
        return cls(name, expr, expr.gradient)

    def derivative(self, p, v) -> complex:
        return complex(np.sum(self.gradient(np.asarray(p, dtype=complex)) * np.asarray(v, dtype=complex)))


@dataclass
class Disqualification:
    member: str
    witness: np.ndarray
    modulus: float


@dataclass
class CandidateFamily:
    """Static members plus factories producing members adapted to ``(p, v)``."""

    name: str
    members: list[Candidate] = field(default_factory=list)
    factories: list[Callable[[np.ndarray, np.ndarray], list[Candidate]]] = field(default_factory=list)

    def candidates(self, p, v) -> list[Candidate]:
        out = list(self.members)
        for make in self.factories:
            out.extend(make(np.asarray(p, dtype=complex), np.asarray(v, dtype=complex)))
        return out

    def __or__(self, other: "CandidateFamily") -> "CandidateFamily":
        return CandidateFamily(f"{self.name}|{other.name}", self.members + other.members,
                               self.factories + other.factories)


def check_disc_valued(member: Candidate, points: np.ndarray) -> Disqualification | None:
    vals = np.abs(member.value(points))
    bad = ~(vals < 1)
    if bad.any():
        i = int(np.argmax(np.where(bad, np.nan_to_num(vals, nan=np.inf), -1)))
        return Disqualification(member.name, points[i], float(vals[i]))
    return None


def validate_family(family: CandidateFamily, points: np.ndarray) -> tuple[CandidateFamily, list[Disqualification]]:
    """Drop static members that leave the disc at some probe point."""
    keep, dropped = [], []
    for m in family.members:
        d = check_disc_valued(m, points)
        (dropped if d else keep).append(d or m)
    return CandidateFamily(family.name, keep, family.factories), dropped


def _unit_vectors(n: int, count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def linear_functional(name: str, center, u, radius: float) -> Candidate:
    """``z -> <z - center, u> / radius`` for a unit vector ``u``."""
    c = np.asarray(center, dtype=complex)
    cu = np.conj(np.asarray(u, dtype=complex)) / radius
    return Candidate(name, lambda z: (np.asarray(z) - c) @ cu,
                     lambda z: np.broadcast_to(cu, np.shape(z)).copy())


def ball_family(spec: Ball | None = None, n: int | None = None, center=None, radius: float = 1.0,
                grid: int = 32, seed: int = 0) -> CandidateFamily:
    """Linear functionals of a ball, including those aligned with ``v`` and ``p``."""
    if spec is not None:
        n, center, radius = spec.n, spec.center, spec.radius
    center = np.zeros(n, dtype=complex) if center is None else np.asarray(center, dtype=complex)
    members = [linear_functional(f"coord{j}", center, np.eye(n)[j], radius) for j in range(n)]
    members += [linear_functional(f"u{i}", center, u, radius) for i, u in enumerate(_unit_vectors(n, grid, seed))]

    def adapted(p, v):
        out = []
        dirs = [v, p - center]
        d = p - center
        if np.linalg.norm(d) > 0 and np.linalg.norm(v) > 0:
            # mix of v and p directions, which contains the extremal functional for balls
            for s in np.linspace(0.1, 0.9, 9):
                dirs.append(s * v / np.linalg.norm(v) + (1 - s) * d / np.linalg.norm(d))
        for i, u in enumerate(dirs):
            nu = np.linalg.norm(u)
            if nu > 0:
                out.append(linear_functional(f"adapted{i}", center, u / nu, radius))
        return out

    return CandidateFamily("ball-linear", members, [adapted])


def polydisc_family(spec: Polydisc) -> CandidateFamily:
    members = []
    for j, r in enumerate(spec.radii):
        e = np.zeros(spec.n)
        e[j] = 1
        members.append(linear_functional(f"coord{j}", np.zeros(spec.n), e, r))
    return CandidateFamily("polydisc-coordinates", members)


def cayley(name: str, n: int, tau: float) -> Candidate:
    """``(1 + tau z_n) / (1 - tau z_n)``; disc-valued exactly on ``{Re z_n < 0}``."""

    def value(z):
        zn = np.asarray(z, dtype=complex)[..., -1]
        with np.errstate(divide="ignore", invalid="ignore"):
            return (1 + tau * zn) / (1 - tau * zn)

    def gradient(z):
        z = np.asarray(z, dtype=complex)
        g = np.zeros_like(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            g[..., -1] = 2 * tau / (1 - tau * z[..., -1]) ** 2
        return g

    return Candidate(name, value, gradient)


def half_plane_family(n: int, taus: Sequence[float] = (0.25, 0.5, 1.0, 2.0, 4.0)) -> CandidateFamily:
    members = [cayley(f"cayley{tau:g}", n, tau) for tau in taus]

    def adapted(p, v):
        x = -p[-1].real
        return [cayley("cayley-adapted", n, 1.0 / x)] if x > 0 else []

    return CandidateFamily("half-plane", members, [adapted])


def egg_member(kappa: float, z0: complex) -> Candidate:
    """``w exp(kappa conj(z0) z - kappa |z0|^2 / 2)``; modulus below ``exp(-kappa |z - z0|^2 / 2)``."""
    z0 = complex(z0)

    def value(z):
        z = np.asarray(z)
        return z[..., 1] * np.exp(kappa * np.conj(z0) * z[..., 0] - kappa * abs(z0) ** 2 / 2)

    def gradient(z):
        z = np.asarray(z, dtype=complex)
        e = np.exp(kappa * np.conj(z0) * z[..., 0] - kappa * abs(z0) ** 2 / 2)
        return np.stack([kappa * np.conj(z0) * z[..., 1] * e, e], axis=-1)

    return Candidate(f"egg-w[{z0:.3g}]", value, gradient)


def egg_family(spec: Egg, grid=np.linspace(-2, 2, 5)) -> CandidateFamily:
    members = [egg_member(spec.kappa, x + 1j * y) for x in grid for y in grid]

    def adapted(p, v):
        return [egg_member(spec.kappa, p[0] + d) for d in (0, 0.1, -0.1, 0.1j, -0.1j)]

    return CandidateFamily("egg-w", members, [adapted])


def expression_family(exprs: dict[str, Expr] | Sequence[Expr]) -> CandidateFamily:
    items = exprs.items() if isinstance(exprs, dict) else ((f"expr{i}", e) for i, e in enumerate(exprs))
    return CandidateFamily("user", [Candidate.from_expr(k, e) for k, e in items])


def peak_family(Q: Expr | Candidate, spec: DomainSpec, n_sup: int = 4000, margin: float = 1e-3,
                seed: int = 0) -> CandidateFamily:
    """``g = Q * sum_j conj(v_j) (z_j - p_j)``, rescaled by its sampled supremum.

    ``g(p) = 0`` and ``dg_p(v) = Q(p) ||v||^2``; the rescaling makes the
    candidate disc-valued on the sample, which validation then rechecks.
    """
    if isinstance(Q, Expr):
        Q = Candidate.from_expr("Q", Q)
    pts = interior_points(spec, n_sup, seed=seed)
    qvals = Q.value(pts)

    def adapted(p, v):
        lin = (pts - p) @ np.conj(v)
        sup = float(np.max(np.abs(qvals * lin)))
        c = 1.0 / (sup * (1 + margin))

        def value(z):
            return c * Q.value(z) * ((np.asarray(z) - p) @ np.conj(v))

        def gradient(z):
            z = np.asarray(z, dtype=complex)
            lz = (z - p) @ np.conj(v)
            return c * (Q.gradient(z) * lz[..., None] + Q.value(z)[..., None] * np.conj(v))

        return [Candidate("peak-combinator", value, gradient)]

    return CandidateFamily("peak-combinator", [], [adapted])


def default_family(spec: DomainSpec) -> CandidateFamily:
    if isinstance(spec, Ball):
        return ball_family(spec)
    if isinstance(spec, Polydisc):
        return polydisc_family(spec)
    if isinstance(spec, Egg):
        return egg_family(spec)
    if isinstance(spec, Truncated):
        return ball_family(n=spec.n, radius=spec.R) | default_family(spec.inner)
    if isinstance(spec, Bumped):
        return default_family(spec.inner)
    # graph-type domains: valid only when the domain lies in {Re z_n < 0}
    return half_plane_family(spec.n)


# ---------------------------------------------------------------------------
# Carathéodory lower bound
# ---------------------------------------------------------------------------


@dataclass
class CaratheodoryBound:
    value: float
    member: str | None
    disqualified: list[Disqualification]


def check_points(spec: DomainSpec, count: int = 2000, seed: int = 0) -> np.ndarray:
    return interior_points(spec, count, seed=seed)


def caratheodory_bound(spec: DomainSpec, family: CandidateFamily, p, v, points: np.ndarray | None = None,
                       validated: bool = False) -> CaratheodoryBound:
    """Best Möbius-normalized ``|dF_p(v)| / (1 - |F(p)|^2)`` over disc-valued members."""
    p = np.asarray(p, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if not contains(spec, p):
        raise ValueError(f"point {p!r} is not interior")
    if points is None:
        points = check_points(spec)
    points = np.concatenate([points, p[None, :]])
    best, best_name, dropped = 0.0, None, []
    cands = family.candidates(p, v)
    if not cands:
        raise EmptyFamily(f"candidate family {family.name!r} is empty")
    n_static = len(family.members)
    for i, m in enumerate(cands):
        if not (validated and i < n_static):
            d = check_disc_valued(m, points)
            if d is not None:
                dropped.append(d)
                continue
        fp = complex(m.value(p))
        val = abs(m.derivative(p, v)) / (1 - abs(fp) ** 2)
        if val > best or best_name is None:
            best, best_name = val, m.name
    if best_name is None:
        raise EmptyFamily(f"every member of {family.name!r} was disqualified "
                          f"(e.g. {dropped[0].member} reaches |F| = {dropped[0].modulus:.3g} "
                          f"at {dropped[0].witness!r})", dropped[0].witness)
    if dropped:
        warnings.warn(f"{len(dropped)} candidate(s) of {family.name!r} disqualified; "
                      f"first: {dropped[0].member} at {dropped[0].witness!r}", stacklevel=2)
    return CaratheodoryBound(float(best), best_name, dropped)


def caratheodory_lower(spec: DomainSpec, family: CandidateFamily, p, v, points: np.ndarray | None = None) -> float:
    return caratheodory_bound(spec, family, p, v, points).value


# ---------------------------------------------------------------------------
# Kobayashi upper bound
# ---------------------------------------------------------------------------


@dataclass
class KobayashiBound:
    value: float
    radius: float
    angles: int
    capped: bool


def _disc_fits(spec, p, v, R, angles, rings) -> bool:
    theta = np.exp(2j * np.pi * np.arange(angles) / angles)
    lam = (rings[:, None] * theta[None, :]).ravel()
    pts = p[None, :] + R * lam[:, None] * v[None, :]
    return bool(np.all(contains(spec, pts)))


def kobayashi_bound(spec: DomainSpec, p, v, angles: int = 256, tol: float = 1e-6, r_max: float = 1e6,
                    ring_depth: int = 10) -> KobayashiBound:
    """``1 / R`` for the largest sampled affine disc ``lambda -> p + lambda R v`` inside ``spec``.

    Membership is tested on ``angles`` points of the circles
    ``|lambda| in {2^-j} and {1 - 2^-j}``; the result is an upper bound for
    the Kobayashi length up to that sampling resolution.
    """
    p = np.asarray(p, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    if not contains(spec, p):
        raise ValueError(f"point {p!r} is not interior")
    j = np.arange(1, ring_depth + 1)
    rings = np.unique(np.concatenate([[1.0], 1 - 0.5**j, 0.5**j]))
    lo, hi = 0.0, 1.0 / np.linalg.norm(v)
    while _disc_fits(spec, p, v, hi, angles, rings):
        lo, hi = hi, 2 * hi
        if hi > r_max:
            return KobayashiBound(float(1.0 / lo), float(lo), angles, True)
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if _disc_fits(spec, p, v, mid, angles, rings):
            lo = mid
        else:
            hi = mid
    if lo == 0:
        warnings.warn(f"no affine disc found at {p!r}; point is within sampling resolution of the boundary")
        return KobayashiBound(float("inf"), 0.0, angles, False)
    return KobayashiBound(float(1.0 / lo), float(lo), angles, False)


def kobayashi_upper(spec: DomainSpec, p, v, angles: int = 256, tol: float = 1e-6) -> float:
    return kobayashi_bound(spec, p, v, angles, tol).value


# ---------------------------------------------------------------------------
# Hahn-Lu comparison
# ---------------------------------------------------------------------------


def spec_label(spec: DomainSpec) -> str:
    if isinstance(spec, Ball):
        return "disc" if spec.n == 1 else f"ball{spec.n}"
    if isinstance(spec, Polydisc):
        return f"polydisc{spec.n}"
    if isinstance(spec, Egg):
        return f"egg_k{spec.kappa:g}"
    if isinstance(spec, Truncated):
        return f"truncated_{spec_label(spec.inner)}_R{spec.R:g}"
    if isinstance(spec, Bumped):
        return f"bumped_{spec_label(spec.inner)}_e{spec.eps:g}"
    return type(spec).__name__.lower()


@dataclass
class MetricReport:
    domain: str
    point: np.ndarray
    direction: np.ndarray
    c_lower: float
    k_upper: float
    b: float | None
    hahn_lu_ok: bool | None
    ordering_ok: bool
    provenance: str

    CSV_COLUMNS = ("domain", "p", "v", "c_lower", "k_upper", "b", "hahn_lu_ok", "ordering_ok", "provenance")

    def row(self) -> list:
        def fmt(z):
            return " ".join(f"{c.real:.17g}{c.imag:+.17g}j" for c in z)

        return [self.domain, fmt(self.point), fmt(self.direction), repr(self.c_lower), repr(self.k_upper),
                "" if self.b is None else repr(self.b), self.hahn_lu_ok, self.ordering_ok, self.provenance]

    def as_dict(self) -> dict:
        return dict(zip(self.CSV_COLUMNS, self.row()))


def reports_to_csv(reports: Sequence[MetricReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(MetricReport.CSV_COLUMNS)
    for r in reports:
        writer.writerow(r.row())
    return buf.getvalue()


def hahn_lu_check(spec: DomainSpec, engine, family: CandidateFamily, p, v, tol: float = 1e-6,
                  points: np.ndarray | None = None, angles: int = 256) -> MetricReport:
    """Compare ``c_lower^2`` with ``b_p(v, v)`` and ``c_lower`` with ``k_upper``."""
    p = np.asarray(p, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if not float(engine.diag(p)) > 0:
        raise UndefinedBergmanForm(f"K(p, p) <= 0 at {p!r}; comparison inapplicable")
    c = caratheodory_lower(spec, family, p, v, points)
    k = kobayashi_upper(spec, p, v, angles=angles)
    b = bergman_form(engine, p)(v).real
    prov = f"c=sampled_bound;k=sampled_bound;b={engine.provenance}"
    return MetricReport(spec_label(spec), p, v, float(c), float(k), float(b),
                        bool(c**2 <= b * (1 + tol)), bool(c <= k * (1 + tol)), prov)


# ---------------------------------------------------------------------------
# Curves and distances
# ---------------------------------------------------------------------------


def curve_length(metric: Callable, curve: Callable[[np.ndarray], np.ndarray], samples: int = 257,
                 spec: DomainSpec | None = None) -> float:
    """Trapezoid rule for ``int_0^1 metric(gamma(t), gamma'(t)) dt`` with difference tangents."""
    t = np.linspace(0.0, 1.0, samples)
    pts = np.asarray(curve(t), dtype=complex)
    if spec is not None:
        inside = contains(spec, pts)
        if not inside.all():
            raise ValueError(f"curve leaves the domain at t = {t[np.argmin(inside)]:.6g}")
    tangents = np.gradient(pts, t, axis=0, edge_order=2)
    vals = np.array([metric(x, dx) for x, dx in zip(pts, tangents)], dtype=float)
    return float(np.trapezoid(vals, t))


def refine_curve_length(metric, curve, spec=None, samples: int = 65, rtol: float = 1e-3,
                        max_doublings: int = 10) -> tuple[float, int, bool]:
    """Double the sample count until successive lengths agree to ``rtol``."""
    prev = curve_length(metric, curve, samples, spec)
    for _ in range(max_doublings):
        samples = 2 * samples - 1
        cur = curve_length(metric, curve, samples, spec)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur, samples, True
        prev = cur
    return prev, samples, False


def pushforward_distance_lower(f: Candidate | Callable, p, q) -> float:
    """``d^P(f(p), f(q))``, a lower bound for the integrated Carathéodory distance."""
    value = f.value if isinstance(f, Candidate) else f
    fp = complex(np.asarray(value(np.asarray(p, dtype=complex))))
    fq = complex(np.asarray(value(np.asarray(q, dtype=complex))))
    if abs(fp) >= 1 or abs(fq) >= 1:
        raise CandidateDisqualified(f"candidate leaves the disc: |f(p)| = {abs(fp):.6g}, |f(q)| = {abs(fq):.6g}")
    return poincare_distance(fp, fq)


@dataclass
class CompletenessReport:
    points: np.ndarray
    lower_bounds: np.ndarray
    increments: np.ndarray
    strictly_increasing: bool
    exceeds: dict
    disqualified: list[Disqualification]
    kind: str


def egg_bergman_distance_lower(spec: Egg, p, q) -> float:
    """``sqrt(kappa) |z_q - z_p|``: Bergman lengths dominate ``sqrt(kappa)`` times the projection to ``{w = 0}``."""
    return float(np.sqrt(spec.kappa) * abs(complex(q[0]) - complex(p[0])))


def homothety_escape(spec: WBGraph, base, ts: Sequence[float]) -> np.ndarray:
    return np.array([homothety(spec.weights, t, base) for t in ts])


def completeness_probe(spec: DomainSpec, escape=None, families: Sequence[CandidateFamily] | None = None,
                       base=None, ts: Sequence[float] | None = None, thresholds: Sequence[float] = (),
                       points: np.ndarray | None = None) -> CompletenessReport:
    """Distance lower bounds from the first escape point to each later one.

    Graph domains get the homothety escape ``Lambda_t(base)`` when ``escape``
    is omitted. On ``Egg`` the bound is the Bergman projection bound; elsewhere
    it is the best pushforward Poincaré distance over validated members.
    """
    if escape is None:
        if not isinstance(spec, WBGraph) or base is None or ts is None:
            raise ValueError("escape points are required unless spec is a graph domain with base and ts")
        escape = homothety_escape(spec, base, ts)
    escape = np.asarray(escape, dtype=complex)
    if not np.all(contains(spec, escape)):
        raise ValueError("escape points must be interior")
    dropped: list[Disqualification] = []
    if isinstance(spec, Egg):
        bounds = np.array([egg_bergman_distance_lower(spec, escape[0], q) for q in escape])
        kind = "bergman_projection"
    else:
        families = list(families) if families is not None else [default_family(spec)]
        if points is None:
            points = check_points(spec)
        points = np.concatenate([points, escape])
        members = []
        for fam in families:
            for m in fam.candidates(escape[0], np.zeros(spec.n)):
                d = check_disc_valued(m, points)
                (dropped if d else members).append(d or m)
        if not members:
            first = dropped[0] if dropped else None
            where = f": {first.member} reaches |F| = {first.modulus:.4g} at {first.witness!r}" if first else ""
            raise EmptyFamily(f"no disc-valued candidate survives validation{where}",
                              None if first is None else first.witness)
        bounds = np.array([max(pushforward_distance_lower(m, escape[0], q) for m in members) for q in escape])
        kind = "caratheodory_pushforward"
    inc = np.diff(bounds)
    exceeds = {thr: bool(np.any(bounds > thr)) for thr in thresholds}
    return CompletenessReport(escape, bounds, inc, bool(np.all(inc > 0)), exceeds, dropped, kind)
