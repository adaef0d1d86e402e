"""Exact symbolic algebra of ladder-operator polynomials.

Every element is kept in normal order, ``sum c[m, n] (a+)^m a^n``, under the
(possibly deformed) relation ``a a+ - q a+ a = 1``.  Reordering uses the
closed recursions

    a (a+)^m  = q^m (a+)^m a + [m]_q (a+)^(m-1)
    a+ a^n    = q^-n a^n a+ - (q^-1 + ... + q^-n) a^(n-1)

where ``[m]_q = 1 + q + ... + q^(m-1)``.  For ``q = 1`` all coefficients that
arise from integer-coefficient input are integers and therefore exact in
double precision.

The delta-derivative and delta-integral act on ordered monomials only:
with respect to ``a`` on the normal representative, with respect to ``a+``
on the anti-normal one.
"""

from __future__ import annotations

import cmath
import math
from enum import Enum
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Mapping, Union

from .expr import (
    A,
    ADAG,
    Atom,
    Commutator,
    Dagger,
    OpExpr,
    P,
    Power,
    Product,
    Q,
    Scalar,
    Sum,
)

SQRT2 = math.sqrt(2.0)


class Var(str, Enum):
    """Differentiation / integration variable."""

    A = "a"
    ADAG = "ad"


def _check_q(q: float) -> float:
    q = float(q)
    if not (q > 0 and math.isfinite(q)):
        raise ValueError(f"deformation parameter must be a finite q > 0, got {q!r}")
    return q


def _finite(c: complex) -> complex:
    c = complex(c)
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise ValueError(f"coefficients must be finite, got {c!r}")
    return c


class _OrderedPoly:
    """Sparse map from exponent pairs to nonzero complex coefficients."""

    __slots__ = ("_terms", "_q")

    def __init__(self, terms: Mapping[tuple, complex] | Iterable = (), q: float = 1.0):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple[int, int], complex] = {}
        for key, c in items:
            i, j = key
            if int(i) != i or int(j) != j or i < 0 or j < 0:
                raise ValueError(f"exponents must be non-negative integers, got {key!r}")
            k = (int(i), int(j))
            acc[k] = acc.get(k, 0j) + _finite(c)
        # adding 0.0 clears signed zeros so printing and JSON stay canonical
        self._terms = MappingProxyType({k: complex(v.real + 0.0, v.imag + 0.0) for k, v in acc.items() if v != 0})
        self._q = _check_q(q)

    @property
    def terms(self) -> Mapping[tuple[int, int], complex]:
        return self._terms

    @property
    def q(self) -> float:
        return self._q

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms.items(), reverse=True))

    def __getitem__(self, key) -> complex:
        return self._terms.get(tuple(key), 0j)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self._q == other._q and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash((type(self).__name__, self._q, frozenset(self._terms.items())))

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((i + j for i, j in self._terms), default=0)

    def isclose(self, other, tol: float = 1e-12) -> bool:
        """Coefficient-wise comparison with absolute tolerance ``tol``."""
        if type(other) is not type(self) or other._q != self._q:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(self[k] - other[k]) <= tol for k in keys)

    def chop(self, tol: float = 1e-14):
        """Drop coefficients (and real/imaginary parts) smaller than ``tol``."""
        out = {}
        for k, c in self._terms.items():
            re = c.real if abs(c.real) > tol else 0.0
            im = c.imag if abs(c.imag) > tol else 0.0
            out[k] = complex(re, im)
        return type(self)(out, self._q)


class NormalPoly(_OrderedPoly):
    """Normal-ordered polynomial ``sum c[m, n] (a+)^m a^n``.

    Keys are ``(m, n)`` with ``m`` the creation power and ``n`` the
    annihilation power.  Instances are immutable; arithmetic returns new
    polynomials and respects the deformation parameter ``q``.

    >>> a, ad = NormalPoly.a(), NormalPoly.adag()
    >>> a * ad == ad * a + 1
    True
    """

    __slots__ = ()

    @classmethod
    def constant(cls, c: complex, q: float = 1.0) -> "NormalPoly":
        return cls({(0, 0): c}, q)

    @classmethod
    def monomial(cls, m: int, n: int, c: complex = 1.0, q: float = 1.0) -> "NormalPoly":
        return cls({(m, n): c}, q)

    @classmethod
    def a(cls, q: float = 1.0) -> "NormalPoly":
        return cls({(0, 1): 1.0}, q)

    @classmethod
    def adag(cls, q: float = 1.0) -> "NormalPoly":
        return cls({(1, 0): 1.0}, q)

    @classmethod
    def number(cls, q: float = 1.0) -> "NormalPoly":
        return cls({(1, 1): 1.0}, q)

    def _coerce(self, other) -> "NormalPoly":
        if isinstance(other, NormalPoly):
            if other._q != self._q:
                raise ValueError(f"cannot combine polynomials with q={self._q} and q={other._q}")
            return other
        if isinstance(other, (int, float, complex)):
            return NormalPoly.constant(other, self._q)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0j) + c
        return NormalPoly(acc, self._q)

    __radd__ = __add__

    def __neg__(self):
        return NormalPoly({k: -c for k, c in self._terms.items()}, self._q)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            c = _finite(other)
            return NormalPoly({k: v * c for k, v in self._terms.items()}, self._q)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc: dict[tuple[int, int], complex] = {}
        for (m1, n1), c1 in self._terms.items():
            for (m2, n2), c2 in other._terms.items():
                for (i, j), c in _normal_of_an_adm(n1, m2, self._q):
                    key = (m1 + i, j + n2)
                    acc[key] = acc.get(key, 0j) + c1 * c2 * c
        return NormalPoly(acc, self._q)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * (1.0 / complex(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("powers must be non-negative integers")
        result = NormalPoly.constant(1.0, self._q)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def dagger(self) -> "NormalPoly":
        # (c (a+)^m a^n)^+ = conj(c) (a+)^n a^m, which is already normal
        return NormalPoly({(n, m): c.conjugate() for (m, n), c in self._terms.items()}, self._q)

    def is_hermitian(self) -> bool:
        return self == self.dagger()

    def __repr__(self):
        q = "" if self._q == 1.0 else f", q={self._q!r}"
        return f"NormalPoly({dict(sorted(self._terms.items(), reverse=True))!r}{q})"

    def __str__(self):
        return to_text(self)


class AntiNormalPoly(_OrderedPoly):
    """Anti-normal-ordered polynomial ``sum c[n, m] a^n (a+)^m``.

    Keys are ``(n, m)``: annihilation power first, matching the word order.
    """

    __slots__ = ()

    def to_normal(self) -> NormalPoly:
        acc: dict[tuple[int, int], complex] = {}
        for (n, m), c in self._terms.items():
            for key, x in _normal_of_an_adm(n, m, self._q):
                acc[key] = acc.get(key, 0j) + c * x
        return NormalPoly(acc, self._q)

    def __repr__(self):
        q = "" if self._q == 1.0 else f", q={self._q!r}"
        return f"AntiNormalPoly({dict(sorted(self._terms.items(), reverse=True))!r}{q})"


# -- reordering kernels -----------------------------------------------------


def _qint(m: int, q: float) -> float:
    """``[m]_q = 1 + q + ... + q^(m-1)``."""
    return float(m) if q == 1.0 else sum(q**k for k in range(m))


@lru_cache(maxsize=None)
def _normal_of_an_adm(n: int, m: int, q: float) -> tuple:
    """Normal form of ``a^n (a+)^m`` as ``((m', n'), coef)`` pairs."""
    if n == 0 or m == 0:
        return (((m, n), 1.0),)
    acc: dict[tuple[int, int], float] = {}
    qm = q**m
    # a^n (a+)^m = q^m [a^(n-1) (a+)^m] a + [m]_q a^(n-1) (a+)^(m-1)
    for (i, j), c in _normal_of_an_adm(n - 1, m, q):
        acc[(i, j + 1)] = acc.get((i, j + 1), 0.0) + qm * c
    qi = _qint(m, q)
    for (i, j), c in _normal_of_an_adm(n - 1, m - 1, q):
        acc[(i, j)] = acc.get((i, j), 0.0) + qi * c
    return tuple((k, v) for k, v in acc.items() if v != 0)


@lru_cache(maxsize=None)
def _anti_of_adm_an(m: int, n: int, q: float) -> tuple:
    """Anti-normal form of ``(a+)^m a^n`` as ``((n', m'), coef)`` pairs."""
    if n == 0 or m == 0:
        return (((n, m), 1.0),)
    r = 1.0 / q
    rn = r**n
    cn = float(n) if q == 1.0 else sum(r**k for k in range(1, n + 1))
    acc: dict[tuple[int, int], float] = {}
    # (a+)^m a^n = r^n [(a+)^(m-1) a^n] a+ - c_n (a+)^(m-1) a^(n-1)
    for (i, j), c in _anti_of_adm_an(m - 1, n, q):
        acc[(i, j + 1)] = acc.get((i, j + 1), 0.0) + rn * c
    for (i, j), c in _anti_of_adm_an(m - 1, n - 1, q):
        acc[(i, j)] = acc.get((i, j), 0.0) - cn * c
    return tuple((k, v) for k, v in acc.items() if v != 0)


# -- public operations ------------------------------------------------------

PolyLike = Union[NormalPoly, AntiNormalPoly, OpExpr, int, float, complex]


def normal_order(expr: PolyLike, q: float = 1.0) -> NormalPoly:
    """Evaluate ``expr`` into its normal-ordered form under ``a a+ - q a+ a = 1``.

    ``q`` and ``p`` atoms are only meaningful for the undeformed algebra and
    raise :class:`ValueError` when ``q != 1``.

    >>> from deltacalc.expr import A, ADAG
    >>> normal_order(A * A * ADAG)
    NormalPoly({(1, 2): (1+0j), (0, 1): (2+0j)})
    """
    q = _check_q(q)
    if isinstance(expr, NormalPoly):
        if expr.q != q:
            raise ValueError(f"polynomial has q={expr.q}, requested q={q}")
        return expr
    if isinstance(expr, AntiNormalPoly):
        if expr.q != q:
            raise ValueError(f"polynomial has q={expr.q}, requested q={q}")
        return expr.to_normal()
    if isinstance(expr, (int, float, complex)):
        return NormalPoly.constant(expr, q)
    return _eval(expr, q)


def _eval(e: OpExpr, q: float) -> NormalPoly:
    if isinstance(e, Atom):
        if e.name == "a":
            return NormalPoly.a(q)
        if e.name == "ad":
            return NormalPoly.adag(q)
        if q != 1.0:
            raise ValueError("position/momentum atoms are undefined for deformed q != 1")
        a, ad = NormalPoly.a(), NormalPoly.adag()
        if e.name == "q":
            return (ad + a) * (1 / SQRT2)
        return (a - ad) * (1 / (SQRT2 * 1j))
    if isinstance(e, Scalar):
        return NormalPoly.constant(e.value, q)
    if isinstance(e, Sum):
        acc = NormalPoly((), q)
        for t, s in zip(e.terms, e.signs):
            acc = acc + _eval(t, q) if s == 1 else acc - _eval(t, q)
        return acc
    if isinstance(e, Product):
        acc = _eval(e.factors[0], q)
        for f in e.factors[1:]:
            acc = acc * _eval(f, q)
        return acc
    if isinstance(e, Power):
        return _eval(e.base, q) ** e.exponent
    if isinstance(e, Commutator):
        x, y = _eval(e.left, q), _eval(e.right, q)
        return x * y - y * x
    if isinstance(e, Dagger):
        return _eval(e.operand, q).dagger()
    raise TypeError(f"not an operator expression: {type(e).__name__}")


def anti_normal_order(p: PolyLike, q: float = 1.0) -> AntiNormalPoly:
    """Rewrite with every annihilation operator left of every creation operator.

    >>> anti_normal_order(NormalPoly.number())
    AntiNormalPoly({(1, 1): (1+0j), (0, 0): (-1+0j)})
    """
    p = normal_order(p, q)
    acc: dict[tuple[int, int], complex] = {}
    for (m, n), c in p.terms.items():
        for key, x in _anti_of_adm_an(m, n, p.q):
            acc[key] = acc.get(key, 0j) + c * x
    return AntiNormalPoly(acc, p.q)


def hermitian_conjugate(p: PolyLike) -> NormalPoly:
    return normal_order(p, getattr(p, "q", 1.0)).dagger()


def commutator(x: PolyLike, y: PolyLike, q: float = 1.0) -> NormalPoly:
    x, y = normal_order(x, q), normal_order(y, q)
    return x * y - y * x


def _var(wrt) -> Var:
    try:
        return Var(wrt)
    except ValueError:
        raise ValueError(f"wrt must be 'a' or 'ad', got {wrt!r}") from None


def delta_deriv(p: PolyLike, wrt: Var | str, q: float = 1.0) -> NormalPoly:
    """delta-derivative on ordered monomials.

    ``wrt='a'``:  ``(a+)^m a^n -> n (a+)^m a^(n-1)`` on the normal form.
    ``wrt='ad'``: ``a^n (a+)^m -> m a^n (a+)^(m-1)`` on the anti-normal form,
    re-normal-ordered.  Constants differentiate to zero.
    """
    wrt = _var(wrt)
    p = normal_order(p, getattr(p, "q", q))
    if wrt is Var.A:
        return NormalPoly({(m, n - 1): n * c for (m, n), c in p.terms.items() if n > 0}, p.q)
    anti = anti_normal_order(p, p.q)
    d = AntiNormalPoly({(n, m - 1): m * c for (n, m), c in anti.terms.items() if m > 0}, p.q)
    return d.to_normal()


def delta_integral(p: PolyLike, wrt: Var | str, q: float = 1.0) -> NormalPoly:
    """Inverse of :func:`delta_deriv` on ordered monomials.

    ``wrt='a'``:  ``(a+)^m a^n -> (a+)^m a^(n+1) / (n+1)``.
    ``wrt='ad'``: ``a^n (a+)^m -> a^n (a+)^(m+1) / (m+1)`` on the anti-normal form.
    """
    wrt = _var(wrt)
    p = normal_order(p, getattr(p, "q", q))
    if wrt is Var.A:
        return NormalPoly({(m, n + 1): c / (n + 1) for (m, n), c in p.terms.items()}, p.q)
    anti = anti_normal_order(p, p.q)
    i = AntiNormalPoly({(n, m + 1): c / (m + 1) for (n, m), c in anti.terms.items()}, p.q)
    return i.to_normal()


# -- position / momentum ----------------------------------------------------

_A_PQ = Product((Scalar(1 / SQRT2), Sum((Q, Product((Scalar(1j), P))), (1, 1))))
_ADAG_PQ = Product((Scalar(1 / SQRT2), Sum((Q, Product((Scalar(1j), P))), (1, -1))))


def to_pq(p: PolyLike) -> OpExpr:
    """Substitute ``a = (q + i p)/sqrt2`` and ``a+ = (q - i p)/sqrt2``."""
    p = normal_order(p)
    terms = []
    for (m, n), c in p:
        factors = [Scalar(c)]
        if m:
            factors.append(Power(_ADAG_PQ, m))
        if n:
            factors.append(Power(_A_PQ, n))
        terms.append(Product(tuple(factors)))
    if not terms:
        return Scalar(0.0)
    return Sum(tuple(terms), (1,) * len(terms))


def from_pq(e: OpExpr) -> NormalPoly:
    """Normal-order an expression in ``q``/``p`` (undeformed algebra only)."""
    return normal_order(e, 1.0)


# -- rendering / serialization ----------------------------------------------


def to_expr(p: NormalPoly) -> OpExpr:
    """Expression tree for ``p``; monomials in canonical (descending) order."""
    terms, signs = [], []
    for (m, n), c in p:
        sign = 1
        if c.imag == 0 and c.real < 0:
            sign, c = -1, complex(-c.real, 0.0)
        factors = [Scalar(c)]
        if m:
            factors.append(ADAG if m == 1 else Power(ADAG, m))
        if n:
            factors.append(A if n == 1 else Power(A, n))
        terms.append(factors[0] if len(factors) == 1 else Product(tuple(factors)))
        signs.append(sign)
    if not terms:
        return Scalar(0.0)
    if len(terms) == 1 and signs[0] == 1:
        return terms[0]
    return Sum(tuple(terms), tuple(signs))


def to_text(p: NormalPoly) -> str:
    from .expr import to_text as _expr_text

    return _expr_text(to_expr(p))


def to_records(p: _OrderedPoly) -> list[dict]:
    """JSON-ready monomial list, highest ``(first, second)`` exponent first.

    Normal polynomials emit ``{m, n, re, im}``; anti-normal ones ``{n, m, re, im}``.
    """
    first, second = ("n", "m") if isinstance(p, AntiNormalPoly) else ("m", "n")
    return [
        {first: i, second: j, "re": c.real, "im": c.imag}
        for (i, j), c in p
    ]


def from_records(records: Iterable[Mapping], q: float = 1.0) -> NormalPoly:
    return NormalPoly({(r["m"], r["n"]): complex(r["re"], r["im"]) for r in records}, q)


def phase_rotate(p: NormalPoly, angle: float) -> NormalPoly:
    """Substitute ``a -> e^{-i angle} a`` and ``a+ -> e^{i angle} a+``."""
    return NormalPoly(
        {(m, n): c * cmath.exp(1j * angle * (m - n)) for (m, n), c in p.terms.items()}, p.q
    )
