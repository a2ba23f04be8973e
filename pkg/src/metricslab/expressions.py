"""Closed-form holomorphic expressions: polynomials, reciprocals, exp, rational powers.

Expressions evaluate on batches of points (last axis = coordinates) and
differentiate symbolically, so candidate maps built from them carry exact
holomorphic derivatives.

JSON form::

    {"op": "add" | "mul", "args": [...]}
    {"op": "pow", "args": [expr], "exp": 3}          # or "exp": [p, q] for p/q
    {"op": "recip" | "exp", "args": [expr]}
    {"op": "coord", "index": j}
    {"op": "const", "re": x, "im": y}
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class ExpressionError(ValueError):
    pass


class Expr:
    def __call__(self, z) -> np.ndarray:
        return self.evaluate(np.asarray(z, dtype=complex))

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diff(self, j: int) -> "Expr":
        raise NotImplementedError

    def gradient(self, z) -> np.ndarray:
        """Holomorphic partials ``(..., n)`` at ``z``."""
        z = np.asarray(z, dtype=complex)
        return np.stack([self.diff(j)(z) for j in range(z.shape[-1])], axis=-1)

    def to_json(self) -> dict:
        raise NotImplementedError

    def substitute(self, mapping: dict) -> "Expr":
        """Replace ``Coord(j)`` by ``mapping[j]`` wherever present."""
        raise NotImplementedError

    # sugar
    def __add__(self, other):
        return Add((self, _lift(other)))

    __radd__ = __add__

    def __mul__(self, other):
        return Mul((self, _lift(other)))

    __rmul__ = __mul__

    def __neg__(self):
        return Mul((Const(-1), self))

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) + (-self)

    def __truediv__(self, other):
        return self * Recip(_lift(other))

    def __rtruediv__(self, other):
        return _lift(other) * Recip(self)

    def __pow__(self, e):
        return Pow(self, Fraction(e))


def _lift(x) -> Expr:
    return x if isinstance(x, Expr) else Const(complex(x))


def _broadcast(value, z):
    return np.broadcast_to(np.asarray(value, dtype=complex), z.shape[:-1]).copy()


@dataclass(frozen=True, eq=False)
class Const(Expr):
    value: complex

    def evaluate(self, z):
        return _broadcast(self.value, z)

    def diff(self, j):
        return Const(0)

    def substitute(self, mapping):
        return self

    def to_json(self):
        return {"op": "const", "re": float(np.real(self.value)), "im": float(np.imag(self.value))}


@dataclass(frozen=True, eq=False)
class Coord(Expr):
    index: int

    def evaluate(self, z):
        if self.index >= z.shape[-1]:
            raise ExpressionError(f"coordinate {self.index} out of range for points in C^{z.shape[-1]}")
        return z[..., self.index].copy()

    def diff(self, j):
        return Const(1 if j == self.index else 0)

    def substitute(self, mapping):
        return mapping.get(self.index, self)

    def to_json(self):
        return {"op": "coord", "index": self.index}


@dataclass(frozen=True, eq=False)
class Add(Expr):
    args: tuple

    def evaluate(self, z):
        out = self.args[0].evaluate(z)
        for a in self.args[1:]:
            out = out + a.evaluate(z)
        return out

    def diff(self, j):
        return Add(tuple(a.diff(j) for a in self.args))

    def substitute(self, mapping):
        return Add(tuple(a.substitute(mapping) for a in self.args))

    def to_json(self):
        return {"op": "add", "args": [a.to_json() for a in self.args]}


@dataclass(frozen=True, eq=False)
class Mul(Expr):
    args: tuple

    def evaluate(self, z):
        out = self.args[0].evaluate(z)
        for a in self.args[1:]:
            out = out * a.evaluate(z)
        return out

    def diff(self, j):
        terms = []
        for i, a in enumerate(self.args):
            rest = self.args[:i] + (a.diff(j),) + self.args[i + 1:]
            terms.append(Mul(rest))
        return Add(tuple(terms))

    def substitute(self, mapping):
        return Mul(tuple(a.substitute(mapping) for a in self.args))

    def to_json(self):
        return {"op": "mul", "args": [a.to_json() for a in self.args]}


@dataclass(frozen=True, eq=False)
class Pow(Expr):
    """``base ** exponent``; non-integer exponents use the principal branch."""

    base: Expr
    exponent: Fraction

    def evaluate(self, z):
        b = self.base.evaluate(z)
        e = self.exponent
        if e.denominator == 1:
            with np.errstate(divide="ignore", invalid="ignore"):
                return b ** int(e)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.exp(float(e) * np.log(b))
        # principal root of zero is zero for positive exponents
        return np.where((b == 0) & (e > 0), 0, out)

    def diff(self, j):
        e = self.exponent
        return Mul((Const(float(e)), Pow(self.base, e - 1), self.base.diff(j)))

    def substitute(self, mapping):
        return Pow(self.base.substitute(mapping), self.exponent)

    def to_json(self):
        e = self.exponent
        return {"op": "pow", "args": [self.base.to_json()],
                "exp": int(e) if e.denominator == 1 else [e.numerator, e.denominator]}


@dataclass(frozen=True, eq=False)
class Recip(Expr):
    arg: Expr

    def evaluate(self, z):
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / self.arg.evaluate(z)

    def diff(self, j):
        return Mul((Const(-1), Pow(self.arg, Fraction(-2)), self.arg.diff(j)))

    def substitute(self, mapping):
        return Recip(self.arg.substitute(mapping))

    def to_json(self):
        return {"op": "recip", "args": [self.arg.to_json()]}


@dataclass(frozen=True, eq=False)
class Exp(Expr):
    arg: Expr

    def evaluate(self, z):
        return np.exp(self.arg.evaluate(z))

    def diff(self, j):
        return Mul((self, self.arg.diff(j)))

    def substitute(self, mapping):
        return Exp(self.arg.substitute(mapping))

    def to_json(self):
        return {"op": "exp", "args": [self.arg.to_json()]}


def coords(n: int) -> list[Coord]:
    return [Coord(j) for j in range(n)]


def exp(e) -> Exp:
    return Exp(_lift(e))


_OPS = {"add", "mul", "pow", "recip", "exp", "coord", "const"}


def from_json(d, location: str = "$") -> Expr:
    if not isinstance(d, dict):
        raise ExpressionError(f"{location}: expression must be an object")
    op = d.get("op")
    if op not in _OPS:
        raise ExpressionError(f"{location}.op: unknown operation {op!r}")
    allowed = {"op", "args"} | {"pow": {"exp"}, "coord": {"index"}, "const": {"re", "im"}}.get(op, set())
    extra = set(d) - allowed
    if extra:
        raise ExpressionError(f"{location}: unknown fields {sorted(extra)}")
    if op == "const":
        return Const(complex(d.get("re", 0.0), d.get("im", 0.0)))
    if op == "coord":
        idx = d.get("index")
        if not isinstance(idx, int) or idx < 0:
            raise ExpressionError(f"{location}.index: expected a non-negative integer")
        return Coord(idx)
    args = d.get("args")
    if not isinstance(args, list) or not args:
        raise ExpressionError(f"{location}.args: expected a non-empty list")
    sub = [from_json(a, f"{location}.args[{i}]") for i, a in enumerate(args)]
    if op == "add":
        return Add(tuple(sub))
    if op == "mul":
        return Mul(tuple(sub))
    if len(sub) != 1:
        raise ExpressionError(f"{location}.args: {op} takes exactly one argument")
    if op == "pow":
        e = d.get("exp")
        if isinstance(e, int):
            return Pow(sub[0], Fraction(e))
        if isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e) and e[1] != 0:
            return Pow(sub[0], Fraction(e[0], e[1]))
        raise ExpressionError(f"{location}.exp: expected an integer or [numerator, denominator]")
    if op == "recip":
        return Recip(sub[0])
    return Exp(sub[0])
