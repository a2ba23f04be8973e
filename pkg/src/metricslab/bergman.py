"""Bergman kernels, Bergman metric tensors and the extremal quantities B0, B1.

Two kinds of kernel engine share one interface (``kernel``, ``diag``,
``provenance``):

* closed forms for the ball, the polydisc and ``Egg(kappa)``;
* :class:`NumericKernel`, the reproducing kernel of the span of a finite
  monomial basis, assembled from its Gram matrix.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from math import factorial, pi

import numpy as np
from scipy.linalg import solve_triangular

from .calculus import levi_form
from .domains import Ball, DomainSpec, Egg, Polydisc, Truncated, contains
from .quadrature import IntegrationPlan, egg_max_mc_degree, fiber_monomial_integral, gram_matrix

ENGINE_FORMAT = "metricslab-kernel/1"


class KernelPoleError(ArithmeticError):
    pass


class GramFactorizationError(np.linalg.LinAlgError):
    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class UndefinedBergmanForm(ArithmeticError):
    pass


def _pairing(z, w):
    """``sum_j z_j conj(w_j)`` over the last axis."""
    return np.sum(np.asarray(z) * np.conj(np.asarray(w)), axis=-1)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


class BallKernel:
    provenance = "closed_form"

    def __init__(self, spec: Ball):
        self.spec = spec
        self.n = spec.n
        self.c = np.asarray(spec.center)
        self.r = spec.radius

    def kernel(self, z, w):
        n, r = self.n, self.r
        base = 1 - _pairing(np.asarray(z) - self.c, np.asarray(w) - self.c) / r**2
        if np.any(base == 0):
            raise KernelPoleError("ball kernel evaluated at a pole")
        return factorial(n) / (pi**n * r ** (2 * n)) * base ** (-(n + 1))

    def diag(self, z):
        return self.kernel(z, z).real

    def form(self, zeta) -> np.ndarray:
        zeta = (np.asarray(zeta, dtype=complex) - self.c) / self.r
        X = float(np.sum(np.abs(zeta) ** 2))
        outer = np.outer(np.conj(zeta), zeta)
        return (self.n + 1) / self.r**2 * (np.eye(self.n) / (1 - X) + outer / (1 - X) ** 2)


class PolydiscKernel:
    provenance = "closed_form"

    def __init__(self, spec: Polydisc):
        self.spec = spec
        self.n = spec.n
        self.r = np.asarray(spec.radii)

    def kernel(self, z, w):
        base = 1 - np.asarray(z) * np.conj(np.asarray(w)) / self.r**2
        if np.any(base == 0):
            raise KernelPoleError("polydisc kernel evaluated at a pole")
        return np.prod(1.0 / (pi * self.r**2 * base**2), axis=-1)

    def diag(self, z):
        return self.kernel(z, z).real

    def form(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        return np.diag(2.0 / (self.r**2 * (1 - np.abs(zeta) ** 2 / self.r**2) ** 2)).astype(complex)


class EggKernel:
    """Closed-form kernel of ``{|w|^2 < exp(-kappa |z|^2)}``.

    With ``s = z_1 conj(w_1)``, ``t = z_2 conj(w_2)`` and ``u = t exp(kappa s)``::

        K = kappa exp(kappa s) (1 + u) / (pi^2 (1 - u)^3)

    obtained from the diagonal monomial norms and
    ``sum_b (b+1)^2 u^b = (1+u)/(1-u)^3``.
    """

    provenance = "closed_form"

    def __init__(self, spec: Egg):
        self.spec = spec
        self.n = 2
        self.kappa = spec.kappa

    def kernel(self, z, w):
        z, w = np.asarray(z, dtype=complex), np.asarray(w, dtype=complex)
        k = self.kappa
        e = np.exp(k * z[..., 0] * np.conj(w[..., 0]))
        u = z[..., 1] * np.conj(w[..., 1]) * e
        if np.any(np.abs(1 - u) < 1e-15):
            raise KernelPoleError("Egg kernel evaluated at a pole (1 - t exp(kappa s) = 0)")
        return k * e * (1 + u) / (pi**2 * (1 - u) ** 3)

    def diag(self, z):
        return self.kernel(z, z).real

    def form(self, zeta) -> np.ndarray:
        # log K(z,z) = kappa|z|^2 + g(u) + const, u = |w|^2 exp(kappa|z|^2)
        z, w = np.asarray(zeta, dtype=complex)
        k = self.kappa
        E = np.exp(k * abs(z) ** 2)
        u = abs(w) ** 2 * E
        g1 = 1 / (1 + u) + 3 / (1 - u)
        g2 = 3 / (1 - u) ** 2 - 1 / (1 + u) ** 2
        du = np.array([k * np.conj(z) * u, np.conj(w) * E])
        ddu = np.array([[k * u * (1 + k * abs(z) ** 2), k * np.conj(z) * w * E],
                        [k * z * np.conj(w) * E, E]])
        b = g1 * ddu + g2 * np.outer(du, np.conj(du))
        b[0, 0] += k
        return b


def closed_form_engine(spec: DomainSpec):
    if isinstance(spec, Ball):
        return BallKernel(spec)
    if isinstance(spec, Polydisc):
        return PolydiscKernel(spec)
    if isinstance(spec, Egg):
        return EggKernel(spec)
    raise ValueError(f"no closed-form kernel for {type(spec).__name__}")


def kernel_closed_form(model: DomainSpec, z, w):
    return closed_form_engine(model).kernel(z, w)


# ---------------------------------------------------------------------------
# Numeric engines
# ---------------------------------------------------------------------------


def monomial_basis(n: int, degree: int) -> np.ndarray:
    """Exponent vectors of total degree <= ``degree``, graded then lexicographic."""
    out = []
    for d in range(degree + 1):
        level = [a for a in itertools.product(range(d, -1, -1), repeat=n) if sum(a) == d]
        out.extend(level)
    return np.array(out, dtype=int).reshape(-1, n)


def exact_monomial_norms(spec: DomainSpec, basis: np.ndarray) -> np.ndarray | None:
    """Closed-form ``||z^alpha||^2`` where the monomials are mutually orthogonal."""
    if isinstance(spec, Ball):
        n, r = spec.n, spec.radius
        return np.array([pi**n * np.prod([factorial(a) for a in al]) / factorial(n + sum(al)) * r ** (2 * sum(al) + 2 * n)
                         for al in basis])
    if isinstance(spec, Polydisc):
        r = np.asarray(spec.radii)
        return np.array([np.prod(pi * r ** (2 * al + 2) / (al + 1)) for al in basis])
    if isinstance(spec, Egg):
        return np.array([fiber_monomial_integral(spec, int(a), int(b)) for a, b in basis])
    return None


@dataclass
class NumericKernel:
    """Kernel of span{(z - center)^alpha : alpha in basis} with Gram-matrix inner products.

    With ``G = D^-1 L L^H D^-1`` (``D`` the diagonal equilibration), the
    orthonormal functions are ``psi = L^-1 D m(z)`` and
    ``K(z, w) = sum_i psi_i(z) conj(psi_i(w))``.
    """

    basis: np.ndarray
    center: np.ndarray
    scale: np.ndarray
    factor: np.ndarray
    condition: float
    provenance: str
    gram_source: str = "mc"

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    @property
    def degree(self) -> int:
        return int(self.basis.sum(axis=1).max())

    def monomials(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex) - self.center
        return np.prod(z[..., None, :] ** self.basis, axis=-1)

    def monomial_derivatives(self, z, v) -> np.ndarray:
        """``d/dv (z - c)^alpha`` for every basis element."""
        z = np.asarray(z, dtype=complex) - self.center
        v = np.asarray(v, dtype=complex)
        out = np.zeros(z.shape[:-1] + (len(self.basis),), dtype=complex)
        for j in range(self.n):
            shifted = self.basis.copy()
            shifted[:, j] -= 1
            ok = shifted[:, j] >= 0
            shifted[~ok, j] = 0
            term = self.basis[:, j] * np.prod(z[..., None, :] ** shifted, axis=-1)
            out += v[..., j, None] * np.where(ok, term, 0)
        return out

    def _orthonormalize(self, m: np.ndarray) -> np.ndarray:
        flat = m.reshape(-1, m.shape[-1]) * self.scale
        psi = solve_triangular(self.factor, flat.T, lower=True)
        return psi.T.reshape(m.shape)

    def orthonormal(self, z) -> np.ndarray:
        return self._orthonormalize(self.monomials(z))

    def orthonormal_derivatives(self, z, v) -> np.ndarray:
        return self._orthonormalize(self.monomial_derivatives(z, v))

    def kernel(self, z, w):
        a = self.orthonormal(z)
        b = self.orthonormal(w)
        # written out so that kernel(z, w) == conj(kernel(w, z)) bit for bit
        re = np.sum(a.real * b.real + a.imag * b.imag, axis=-1)
        im = np.sum(a.imag * b.real - a.real * b.imag, axis=-1)
        return re + 1j * im

    def diag(self, z):
        return np.sum(np.abs(self.orthonormal(z)) ** 2, axis=-1)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "format": ENGINE_FORMAT,
            "provenance": self.provenance,
            "gram_source": self.gram_source,
            "basis": self.basis.tolist(),
            "center": [[c.real, c.imag] for c in self.center],
            "scale": self.scale.tolist(),
            "factor_re": self.factor.real.ravel().tolist(),
            "factor_im": self.factor.imag.ravel().tolist(),
            "condition": self.condition,
        })

    @classmethod
    def from_json(cls, text: str) -> "NumericKernel":
        d = json.loads(text)
        if d.get("format") != ENGINE_FORMAT:
            raise ValueError(f"unsupported engine format {d.get('format')!r}")
        basis = np.array(d["basis"], dtype=int)
        m = len(basis)
        factor = (np.array(d["factor_re"]) + 1j * np.array(d["factor_im"])).reshape(m, m)
        center = np.array([complex(*c) for c in d["center"]])
        return cls(basis, center, np.array(d["scale"]), factor, float(d["condition"]), d["provenance"], d["gram_source"])


def factor_gram(G: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Equilibrated Hermitian Cholesky: returns ``(scale, L, cond)`` with ``diag(scale) G diag(scale) = L L^H``."""
    G = 0.5 * (G + G.conj().T)
    d = np.real(np.diag(G))
    if np.any(d <= 0):
        raise GramFactorizationError("Gram matrix has a non-positive diagonal entry", np.inf)
    scale = 1 / np.sqrt(d)
    Gs = G * scale[:, None] * scale[None, :]
    cond = float(np.linalg.cond(Gs))
    try:
        L = np.linalg.cholesky(Gs)
    except np.linalg.LinAlgError:
        raise GramFactorizationError("Gram matrix is numerically singular", cond) from None
    return scale, L, cond


def build_numeric_engine(
    spec: DomainSpec,
    degree: int,
    plan: IntegrationPlan | None = None,
    gram: str = "auto",
    rel_tol: float = 0.05,
) -> NumericKernel:
    """Kernel of the polynomials of total degree <= ``degree`` on ``spec``.

    ``gram="exact"`` uses closed-form monomial norms (ball, polydisc, Egg),
    ``gram="mc"`` estimates the Gram matrix with :func:`quadrature.gram_matrix`.
    Monte Carlo on Egg is refused beyond the degree whose norms ``plan``
    resolves to ``rel_tol``.
    """
    if not isinstance(spec, (Ball, Polydisc, Egg, Truncated)):
        raise ValueError(f"numeric kernels need a finite-volume model or a truncation, got {type(spec).__name__}")
    basis = monomial_basis(spec.n, degree)
    center = np.asarray(spec.center) if isinstance(spec, Ball) else np.zeros(spec.n, dtype=complex)
    exact = exact_monomial_norms(spec, basis)
    if gram == "auto":
        gram = "exact" if exact is not None else "mc"
    if gram == "exact":
        if exact is None:
            raise ValueError(f"no exact Gram matrix for {type(spec).__name__}")
        G = np.diag(exact).astype(complex)
    elif gram == "mc":
        plan = plan or IntegrationPlan()
        if isinstance(spec, Egg):
            limit = egg_max_mc_degree(plan.samples, rel_tol)
            if degree > limit:
                raise ValueError(f"degree {degree} exceeds the Egg Monte Carlo variance bound {limit} "
                                 f"for {plan.samples} samples")

        def phi(pts):
            return np.prod((pts - center)[:, None, :] ** basis, axis=-1)

        G, _ = gram_matrix(spec, phi, plan)
    else:
        raise ValueError(f"unknown gram mode {gram!r}")
    scale, L, cond = factor_gram(G)
    return NumericKernel(basis, center, scale, L, cond, f"numeric_D{degree}", gram)


def egg_gram_cross_check(spec: Egg, degree: int, plan: IntegrationPlan) -> float:
    """Largest |MC - exact| / stderr over Gram entries of degree <= ``degree``."""
    basis = monomial_basis(2, degree)

    def phi(pts):
        return np.prod(pts[:, None, :] ** basis, axis=-1)

    G, se = gram_matrix(spec, phi, plan)
    exact = np.diag(exact_monomial_norms(spec, basis))
    return float(np.max(np.abs(G - exact) / np.where(se > 0, se, np.inf)))


# ---------------------------------------------------------------------------
# Bergman metric
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BergmanForm:
    point: np.ndarray
    matrix: np.ndarray

    def __call__(self, v, w=None) -> complex:
        """``b(v, w) = sum_ab b_ab v_a conj(w_b)``."""
        v = np.asarray(v, dtype=complex)
        w = v if w is None else np.asarray(w, dtype=complex)
        return complex(v @ self.matrix @ np.conj(w))

    def length(self, v) -> float:
        return float(np.sqrt(max(self(v).real, 0.0)))


def bergman_form(engine, zeta, mode: str | None = None) -> BergmanForm:
    """``b_ab = d^2 log K(z, z) / dz_a dzbar_b`` at ``zeta``."""
    zeta = np.asarray(zeta, dtype=complex)
    K = float(engine.diag(zeta))
    if not K > 0:
        raise UndefinedBergmanForm(f"kernel not positive at point {zeta!r}; Bergman form undefined")
    if mode is None:
        mode = "analytic" if hasattr(engine, "form") else "fd"
    if mode == "analytic":
        if not hasattr(engine, "form"):
            raise ValueError("analytic Bergman forms are only available for closed-form engines")
        return BergmanForm(zeta, np.asarray(engine.form(zeta), dtype=complex))
    if mode != "fd":
        raise ValueError(f"unknown mode {mode!r}")
    h = 1e-3 * (1.0 + float(np.linalg.norm(zeta)))
    L = levi_form(lambda pts: np.log(engine.diag(pts)), zeta, mode="finite_difference", h=h, richardson=True)
    return BergmanForm(zeta, L.matrix)


@dataclass(frozen=True)
class BergmanQuantities:
    B0: float
    B1: float
    B1_extremal: float | None
    residual: float | None


def extremal_B1(engine: NumericKernel, p, v) -> tuple[float, float]:
    """``(B0, B1)`` solved exactly over the span of the engine's basis.

    With ``a = psi(p)`` and ``d = d_v psi(p)`` in an orthonormal basis, the
    maximum of ``|d_v f(p)|^2`` over unit-norm ``f`` with ``f(p) = 0`` is
    ``|d|^2 - |<d, a>|^2 / |a|^2``.
    """
    a = engine.orthonormal(np.asarray(p, dtype=complex))
    d = engine.orthonormal_derivatives(np.asarray(p, dtype=complex), v)
    B0 = float(np.sum(np.abs(a) ** 2))
    if B0 <= 0:
        raise UndefinedBergmanForm("B0 vanishes at p")
    B1 = float(np.sum(np.abs(d) ** 2) - abs(np.vdot(a, d)) ** 2 / B0)
    return B0, B1


def bergman_quantities(engine, p, v, extremal: NumericKernel | None = None) -> BergmanQuantities:
    """``B0 = K(p, p)``, ``B1 = B0 b_p(v, v)`` and, if a finite basis is supplied, the extremal B1."""
    p = np.asarray(p, dtype=complex)
    B0 = float(engine.diag(p))
    if not B0 > 0:
        raise UndefinedBergmanForm(f"B0(p) = {B0} <= 0; quantities undefined")
    B1 = B0 * bergman_form(engine, p)(v).real
    if extremal is None and isinstance(engine, NumericKernel):
        extremal = engine
    if extremal is None:
        return BergmanQuantities(B0, B1, None, None)
    _, B1_ext = extremal_B1(extremal, p, v)
    return BergmanQuantities(B0, B1, B1_ext, abs(B1 - B1_ext) / abs(B1))


def comparison_probes(spec: DomainSpec, count: int = 20, seed: int = 0, scale: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Seeded probe pairs ``(z, w)`` well inside the convergence region of degree-12 truncations.

    Points are drawn from the box ``|Re|, |Im| <= scale`` in the first
    coordinate and ``scale / 2`` in the others, then filtered by membership.
    """
    rng = np.random.default_rng(seed)
    box = np.full(spec.n, scale / 2)
    box[0] = scale
    pts = np.empty((0, spec.n), dtype=complex)
    while len(pts) < 2 * count:
        cand = box * (rng.uniform(-1, 1, (2 * count, spec.n)) + 1j * rng.uniform(-1, 1, (2 * count, spec.n)))
        pts = np.concatenate([pts, cand[contains(spec, cand)]])
    return pts[:count], pts[count:2 * count]
