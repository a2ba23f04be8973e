"""Wirtinger derivatives, Levi forms and their spectra."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .polynomial import HermitianPolynomial

RealFunction = Callable[[np.ndarray], np.ndarray]


class EvaluationError(ArithmeticError):
    """A function returned a non-finite value at a probe point."""


@dataclass(frozen=True)
class LeviForm:
    point: np.ndarray
    matrix: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    @property
    def min_eigenvalue(self) -> float:
        return min_levi_eigenvalue(self)


def wirtinger_derivative(P: HermitianPolynomial, orders, z) -> complex:
    """Mixed Wirtinger derivative ``d^a dbar^b P`` at ``z`` for ``orders = (a, b)``."""
    a, b = orders
    return P.wirtinger(a, b, z)


def default_step(z) -> float:
    return 1e-4 * (1.0 + float(np.linalg.norm(z)))


def _fd_levi(f: RealFunction, z: np.ndarray, h: float) -> np.ndarray:
    """Central-difference complex Hessian of a real function at a single point."""
    k = z.shape[-1]
    # real directions: x_j -> e_j, y_j -> i e_j
    dirs = np.concatenate([np.eye(k), 1j * np.eye(k)]).astype(complex)
    stencil = []
    for p in range(2 * k):
        for q in range(p, 2 * k):
            if p == q:
                stencil += [z + h * dirs[p], z - h * dirs[p]]
            else:
                for sp in (1, -1):
                    for sq in (1, -1):
                        stencil.append(z + sp * h * dirs[p] + sq * h * dirs[q])
    pts = np.array([z] + stencil)
    vals = np.asarray(f(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = pts[~np.isfinite(vals)][0]
        raise EvaluationError(f"non-finite function value at probe point {bad!r}")
    f0 = vals[0]
    it = iter(vals[1:])
    hess = np.zeros((2 * k, 2 * k))
    for p in range(2 * k):
        for q in range(p, 2 * k):
            if p == q:
                fp, fm = next(it), next(it)
                hess[p, p] = (fp - 2 * f0 + fm) / h**2
            else:
                fpp, fpm, fmp, fmm = next(it), next(it), next(it), next(it)
                hess[p, q] = hess[q, p] = (fpp - fpm - fmp + fmm) / (4 * h**2)
    xx, yy = hess[:k, :k], hess[k:, k:]
    xy = hess[:k, k:]
    L = 0.25 * (xx + yy + 1j * (xy - xy.T))
    return 0.5 * (L + L.conj().T)


def levi_form(
    f: Union[RealFunction, HermitianPolynomial],
    z,
    mode: str = "analytic",
    h: float | None = None,
    richardson: bool = False,
) -> LeviForm:
    """Levi form ``d^2 f / dz_j dzbar_l`` at the single point ``z``.

    ``mode="analytic"`` requires a :class:`HermitianPolynomial`. The finite
    difference mode evaluates ``f`` on a batch of points shaped ``(N, k)``
    and has error ``O(h^2)`` (``O(h^4)`` with ``richardson=True``).
    """
    z = np.asarray(z, dtype=complex)
    if mode == "analytic":
        if not isinstance(f, HermitianPolynomial):
            raise TypeError("analytic Levi forms are only available for HermitianPolynomial")
        return LeviForm(z, f.levi_matrix(z))
    if mode != "finite_difference":
        raise ValueError(f"unknown mode {mode!r}")
    h = default_step(z) if h is None else h
    L = _fd_levi(f, z, h)
    if richardson:
        L = (4 * _fd_levi(f, z, h / 2) - L) / 3
    return LeviForm(z, L)


def min_levi_eigenvalue(L: LeviForm | np.ndarray) -> float:
    matrix = L.matrix if isinstance(L, LeviForm) else np.asarray(L)
    return float(np.linalg.eigvalsh(matrix)[0])


def complex_gradient(f: RealFunction, z, h: float | None = None) -> np.ndarray:
    """``(df/dz_1, ..., df/dz_n)`` of a real function by central differences."""
    z = np.asarray(z, dtype=complex)
    k = z.shape[-1]
    h = default_step(z) if h is None else h
    pts = []
    for j in range(k):
        e = np.zeros(k, dtype=complex)
        e[j] = h
        pts += [z + e, z - e, z + 1j * e, z - 1j * e]
    vals = np.asarray(f(np.array(pts)), dtype=float).reshape(k, 4)
    dx = (vals[:, 0] - vals[:, 1]) / (2 * h)
    dy = (vals[:, 2] - vals[:, 3]) / (2 * h)
    return 0.5 * (dx - 1j * dy)


@dataclass(frozen=True)
class PseudoconvexityVerdict:
    point: np.ndarray
    status: str  # "strong", "not strong", "gradient-degenerate"
    min_tangential_eigenvalue: float | None
    gradient_norm: float

    @property
    def strong(self) -> bool:
        return self.status == "strong"


def strong_pseudoconvexity_at(spec, p, tol: float = 1e-6, h: float | None = None) -> PseudoconvexityVerdict:
    """Levi form of the defining function restricted to the complex tangent space at ``p``."""
    from .domains import eval_defining

    p = np.asarray(p, dtype=complex)
    rho_p = float(eval_defining(spec, p))
    if abs(rho_p) >= tol:
        raise ValueError(f"point {p!r} is not on the boundary (rho = {rho_p:.3e})")

    def rho(pts):
        return eval_defining(spec, pts)

    h = 1e-3 * (1.0 + float(np.linalg.norm(p))) if h is None else h
    grad = complex_gradient(rho, p, h)
    gnorm = float(np.linalg.norm(grad))
    if gnorm < tol:
        return PseudoconvexityVerdict(p, "gradient-degenerate", None, gnorm)
    L = levi_form(rho, p, mode="finite_difference", h=h, richardson=True).matrix
    # orthonormal basis of {v : sum_j grad_j v_j = 0}
    _, _, vh = np.linalg.svd(grad[None, :])
    T = vh[1:].conj().T
    # Levi(v, v) = v^T L conj(v)
    restricted = T.T @ L @ T.conj()
    lam = float(np.linalg.eigvalsh(0.5 * (restricted + restricted.conj().T))[0]) if T.shape[1] else np.inf
    status = "strong" if lam > tol else "not strong"
    return PseudoconvexityVerdict(p, status, lam, gnorm)
