"""Real-valued polynomials on C^k stored by bidegree.

A term ``(alpha, beta) -> c`` stands for ``c * z**alpha * conj(z)**beta``.
Construction always symmetrizes the input, so the stored polynomial is the
real part of whatever sum the caller passed in.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Iterable, Mapping

import numpy as np

MultiIndex = tuple[int, ...]
Term = tuple[MultiIndex, MultiIndex]

_ZERO_COEFF = 1e-300


def _as_index(seq, k: int) -> MultiIndex:
    idx = tuple(int(a) for a in seq)
    if len(idx) != k:
        raise ValueError(f"multi-index {idx} has length {len(idx)}, expected {k}")
    if any(a < 0 for a in idx):
        raise ValueError(f"multi-index {idx} has a negative entry")
    return idx


class HermitianPolynomial:
    """Hermitian-symmetric polynomial ``sum c_ab z^a zbar^b`` on C^k."""

    def __init__(self, k: int, terms: Mapping[Term, complex] | Iterable[tuple] = ()):
        self.k = int(k)
        raw: dict[Term, complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for item in items:
            if isinstance(terms, Mapping):
                (alpha, beta), c = item
            else:
                alpha, beta, c = item
            key = (_as_index(alpha, self.k), _as_index(beta, self.k))
            raw[key] = raw.get(key, 0) + complex(c)
        sym: dict[Term, complex] = {}
        for (alpha, beta), c in raw.items():
            sym[(alpha, beta)] = sym.get((alpha, beta), 0) + c / 2
            sym[(beta, alpha)] = sym.get((beta, alpha), 0) + np.conj(c) / 2
        self.terms: dict[Term, complex] = {
            key: c for key, c in sorted(sym.items()) if abs(c) > _ZERO_COEFF
        }
        self._compile()

    def _compile(self):
        if self.terms:
            keys = list(self.terms)
            self._alpha = np.array([a for a, _ in keys], dtype=int).reshape(len(keys), self.k)
            self._beta = np.array([b for _, b in keys], dtype=int).reshape(len(keys), self.k)
            self._coef = np.array([self.terms[key] for key in keys], dtype=complex)
        else:
            self._alpha = np.zeros((0, self.k), dtype=int)
            self._beta = np.zeros((0, self.k), dtype=int)
            self._coef = np.zeros(0, dtype=complex)

    # -- constructors -------------------------------------------------------

    @classmethod
    def abs_power(cls, k: int, j: int, m: int, coeff: float = 1.0) -> "HermitianPolynomial":
        """``coeff * |z_j|^(2m)``."""
        e = [0] * k
        e[j] = m
        return cls(k, [(e, e, coeff)])

    @classmethod
    def norm_squared(cls, k: int) -> "HermitianPolynomial":
        return sum((cls.abs_power(k, j, 1) for j in range(k)), cls(k))

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "HermitianPolynomial") -> "HermitianPolynomial":
        if not isinstance(other, HermitianPolynomial):
            return NotImplemented
        if other.k != self.k:
            raise ValueError("dimension mismatch")
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms.get(key, 0) + c
        return HermitianPolynomial(self.k, terms)

    def __radd__(self, other):
        if other == 0:
            return self
        return self.__add__(other)

    def __neg__(self) -> "HermitianPolynomial":
        return HermitianPolynomial(self.k, {key: -c for key, c in self.terms.items()})

    def __sub__(self, other: "HermitianPolynomial") -> "HermitianPolynomial":
        return self + (-other)

    def __mul__(self, scalar: float) -> "HermitianPolynomial":
        return HermitianPolynomial(self.k, {key: scalar * c for key, c in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, HermitianPolynomial):
            return NotImplemented
        if self.k != other.k or set(self.terms) != set(other.terms):
            return False
        return all(abs(self.terms[t] - other.terms[t]) <= 1e-12 * max(1.0, abs(self.terms[t]))
                   for t in self.terms)

    def __repr__(self) -> str:
        parts = [f"{c:.6g}*z^{a}*zb^{b}" for (a, b), c in self.terms.items()]
        return f"HermitianPolynomial(k={self.k}, {' + '.join(parts) or '0'})"

    # -- evaluation ---------------------------------------------------------

    def _monomials(self, z: np.ndarray, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
        # (..., T) values of z^alpha zbar^beta
        zz = z[..., None, :]
        return np.prod(zz ** alpha * np.conj(zz) ** beta, axis=-1)

    def evaluate_complex(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.shape[-1] != self.k:
            raise ValueError(f"point has dimension {z.shape[-1]}, polynomial expects {self.k}")
        if not self.terms:
            return np.zeros(z.shape[:-1], dtype=complex)
        return self._monomials(z, self._alpha, self._beta) @ self._coef

    def __call__(self, z) -> np.ndarray:
        """Real value at ``z`` (shape ``(..., k)``)."""
        return self.evaluate_complex(z).real

    def wirtinger(self, a: MultiIndex, b: MultiIndex, z) -> np.ndarray:
        """Exact ``d^|a| / dz^a  d^|b| / dzbar^b`` of the polynomial at ``z``."""
        a = np.asarray(_as_index(a, self.k))
        b = np.asarray(_as_index(b, self.k))
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape[:-1], dtype=complex)
        if not self.terms:
            return out
        keep = np.all(self._alpha >= a, axis=1) & np.all(self._beta >= b, axis=1)
        if not keep.any():
            return out
        alpha, beta, coef = self._alpha[keep], self._beta[keep], self._coef[keep]
        factor = np.ones(len(coef))
        for j in range(self.k):
            for s in range(a[j]):
                factor *= alpha[:, j] - s
            for s in range(b[j]):
                factor *= beta[:, j] - s
        return self._monomials(z, alpha - a, beta - b) @ (coef * factor)

    def levi_matrix(self, z) -> np.ndarray:
        """Analytic ``(..., k, k)`` matrix of ``d^2 P / dz_j dzbar_l``."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape[:-1] + (self.k, self.k), dtype=complex)
        for j in range(self.k):
            ej = [0] * self.k
            ej[j] = 1
            for l in range(j, self.k):
                el = [0] * self.k
                el[l] = 1
                val = self.wirtinger(ej, el, z)
                out[..., j, l] = val
                if l != j:
                    out[..., l, j] = np.conj(val)
        # diagonal entries are real for a Hermitian polynomial
        idx = np.arange(self.k)
        out[..., idx, idx] = out[..., idx, idx].real
        return out

    # -- structure ----------------------------------------------------------

    def degree_weights(self, weights: Iterable[int]) -> dict[Term, Fraction]:
        """Weighted degree ``sum (a_j + b_j) / (2 m_j)`` of each term, exactly."""
        m = list(weights)
        return {
            (a, b): sum((Fraction(a[j] + b[j], 2 * m[j]) for j in range(self.k)), Fraction(0))
            for (a, b) in self.terms
        }

    def pure_terms(self) -> list[Term]:
        """Terms holomorphic or antiholomorphic in every variable (alpha = 0 or beta = 0)."""
        return [(a, b) for (a, b) in self.terms if not any(a) or not any(b)]

    # -- serialization ------------------------------------------------------

    def to_json(self) -> list[dict]:
        return [
            {"alpha": list(a), "beta": list(b), "re": float(c.real), "im": float(c.imag)}
            for (a, b), c in self.terms.items()
        ]

    @classmethod
    def from_json(cls, k: int, items: list[dict]) -> "HermitianPolynomial":
        terms = []
        for pos, item in enumerate(items):
            extra = set(item) - {"alpha", "beta", "re", "im"}
            if extra:
                raise ValueError(f"P[{pos}]: unknown fields {sorted(extra)}")
            terms.append((item["alpha"], item["beta"], complex(item.get("re", 0.0), item.get("im", 0.0))))
        return cls(k, terms)


@dataclass(frozen=True)
class WeightSignature:
    """Weights ``(m_1, ..., m_k)`` of a weighted-homogeneous polynomial."""

    m: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        if any(x < 1 for x in self.m):
            raise ValueError(f"weights must be positive integers, got {self.m}")

    def __len__(self) -> int:
        return len(self.m)

    @property
    def mu(self) -> tuple[int, ...]:
        """Covering exponents ``mu_j = (prod m) / m_j``."""
        total = prod(self.m)
        return tuple(total // mj for mj in self.m)

    @property
    def k(self) -> int:
        """Half the homogeneous degree of ``H``: ``k = prod m``."""
        return prod(self.m)


def hkn_polynomial() -> HermitianPolynomial:
    """``|z|^8 + (15/7) |z|^2 Re z^6``, weight (4,)."""
    return HermitianPolynomial(1, [((4,), (4,), 1.0), ((7,), (1,), 15.0 / 7.0)])


def fornaess_polynomial(t: float) -> HermitianPolynomial:
    """``|z|^6 + t |z|^2 Re z^4``, weight (3,)."""
    return HermitianPolynomial(1, [((3,), (3,), 1.0), ((5,), (1,), float(t))])
