"""Expression trees over ladder operators.

An :class:`OpExpr` is a small immutable term tree: atoms ``a`` (annihilation),
``ad`` (creation), ``q`` (position), ``p`` (momentum), complex scalars, and
the compound nodes sum, product, integer power, commutator and conjugate.
Trees carry no algebra of their own; :func:`deltacalc.opalg.normal_order`
evaluates them into canonical polynomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

ATOM_NAMES = ("a", "ad", "q", "p")


class OpExpr:
    """Base class for expression nodes; provides operator sugar."""

    __slots__ = ()

    def __add__(self, other):
        return Sum((self, as_expr(other)), (1, 1))

    def __radd__(self, other):
        return Sum((as_expr(other), self), (1, 1))

    def __sub__(self, other):
        return Sum((self, as_expr(other)), (1, -1))

    def __rsub__(self, other):
        return Sum((as_expr(other), self), (1, -1))

    def __neg__(self):
        return Sum((self,), (-1,))

    def __mul__(self, other):
        return Product((self, as_expr(other)))

    def __rmul__(self, other):
        return Product((as_expr(other), self))

    def __pow__(self, k):
        return Power(self, k)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=True)
class Atom(OpExpr):
    name: str

    def __post_init__(self):
        if self.name not in ATOM_NAMES:
            raise ValueError(f"unknown atom {self.name!r}")


@dataclass(frozen=True, eq=True)
class Scalar(OpExpr):
    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError(f"scalar must be finite, got {v!r}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True, eq=True)
class Sum(OpExpr):
    """Signed n-ary sum; ``signs[i]`` is +1 or -1 for ``terms[i]``."""

    terms: tuple
    signs: tuple

    def __post_init__(self):
        if len(self.terms) != len(self.signs) or not self.terms:
            raise ValueError("Sum needs matching non-empty terms and signs")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")


@dataclass(frozen=True, eq=True)
class Product(OpExpr):
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 1:
            raise ValueError("Product needs at least one factor")


@dataclass(frozen=True, eq=True)
class Power(OpExpr):
    base: OpExpr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError(f"powers must be non-negative integers, got {self.exponent!r}")


@dataclass(frozen=True, eq=True)
class Commutator(OpExpr):
    left: OpExpr
    right: OpExpr


@dataclass(frozen=True, eq=True)
class Dagger(OpExpr):
    operand: OpExpr


A = Atom("a")
ADAG = Atom("ad")
Q = Atom("q")
P = Atom("p")

ExprLike = Union[OpExpr, complex, float, int]


def as_expr(x) -> OpExpr:
    if isinstance(x, OpExpr):
        return x
    if isinstance(x, (int, float, complex)):
        return Scalar(x)
    raise TypeError(f"cannot convert {type(x).__name__} to OpExpr")


def contains_pq(expr: OpExpr) -> bool:
    """True if ``q`` or ``p`` occurs anywhere in the tree."""
    if isinstance(expr, Atom):
        return expr.name in ("q", "p")
    return any(contains_pq(c) for c in children(expr))


def children(expr: OpExpr) -> tuple:
    if isinstance(expr, Sum):
        return expr.terms
    if isinstance(expr, Product):
        return expr.factors
    if isinstance(expr, Power):
        return (expr.base,)
    if isinstance(expr, Commutator):
        return (expr.left, expr.right)
    if isinstance(expr, Dagger):
        return (expr.operand,)
    return ()


def word_degree(expr: OpExpr) -> int:
    """Longest operator word the tree can produce (atoms count one each)."""
    if isinstance(expr, Atom):
        return 1
    if isinstance(expr, Scalar):
        return 0
    if isinstance(expr, Sum):
        return max(word_degree(t) for t in expr.terms)
    if isinstance(expr, Product):
        return sum(word_degree(f) for f in expr.factors)
    if isinstance(expr, Power):
        return word_degree(expr.base) * expr.exponent
    if isinstance(expr, Commutator):
        return word_degree(expr.left) + word_degree(expr.right)
    if isinstance(expr, Dagger):
        return word_degree(expr.operand)
    raise TypeError(type(expr).__name__)


# -- printing ---------------------------------------------------------------


def format_real(x: float) -> str:
    # repr is the shortest string that round-trips the double
    s = repr(float(x))
    if s in ("inf", "-inf", "nan"):
        raise ValueError("non-finite scalar")
    return s


def format_scalar(c: complex) -> str:
    c = complex(c)
    re, im = c.real, c.imag
    if im == 0.0 and not math.copysign(1.0, im) < 0:
        if re >= 0 and math.copysign(1.0, re) > 0:
            return format_real(re)
        return f"(-{format_real(-re)})"
    neg_im = math.copysign(1.0, im) < 0
    if re >= 0 and math.copysign(1.0, re) > 0:
        return f"({format_real(re)}{'-' if neg_im else '+'}{format_real(abs(im))}i)"
    # leading minus negates the whole literal, so the imaginary sign flips
    return f"(-{format_real(-re)}{'+' if neg_im else '-'}{format_real(abs(im))}i)"


def _is_bare_factor(e: OpExpr) -> bool:
    return isinstance(e, (Atom, Scalar, Commutator, Power, Dagger))


def to_text(expr: OpExpr) -> str:
    """Render in the input grammar; parsing the result rebuilds ``expr``."""
    if isinstance(expr, Atom):
        return expr.name
    if isinstance(expr, Scalar):
        return format_scalar(expr.value)
    if isinstance(expr, Sum):
        out = []
        for i, (t, s) in enumerate(zip(expr.terms, expr.signs)):
            body = to_text(t)
            if isinstance(t, Sum):
                body = f"({body})"
            if i == 0:
                out.append(body if s == 1 else f"-{body}")
            else:
                out.append((" + " if s == 1 else " - ") + body)
        return "".join(out)
    if isinstance(expr, Product):
        if len(expr.factors) == 1:
            return f"({to_text(expr.factors[0])})"
        parts = []
        for f in expr.factors:
            body = to_text(f)
            parts.append(body if _is_bare_factor(f) else f"({body})")
        return "*".join(parts)
    if isinstance(expr, Power):
        base = expr.base
        body = to_text(base)
        if not isinstance(base, (Atom, Commutator, Dagger)) and not (
            isinstance(base, Scalar) and body.startswith("(")
        ):
            body = f"({body})"
        return f"{body}^{expr.exponent}"
    if isinstance(expr, Commutator):
        return f"[{to_text(expr.left)}, {to_text(expr.right)}]"
    if isinstance(expr, Dagger):
        return f"dag({to_text(expr.operand)})"
    raise TypeError(type(expr).__name__)
