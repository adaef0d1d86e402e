"""Recursive-descent parser for operator expressions.

Grammar (whitespace insensitive)::

    expr    := ['-'] term (('+' | '-') term)*
    term    := factor ('*' factor)*
    factor  := atom ('^' uint)?
    atom    := 'a' | 'ad' | 'a†' | 'q' | 'p' | complex
             | '(' expr ')' | '[' expr ',' expr ']' | 'dag' '(' expr ')'
    complex := decimal (('+' | '-') decimal 'i')? | decimal 'i'

A number immediately followed by ``+/- decimal i`` is read as one complex
literal, so ``2+0.5i * ad^2*a`` is the scalar ``2+0.5i`` times ``ad^2*a``.
"""

from __future__ import annotations

import re

from .expr import (
    Atom,
    Commutator,
    Dagger,
    OpExpr,
    Power,
    Product,
    Scalar,
    Sum,
)

_DECIMAL = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(rf"({_DECIMAL})\s*([+-])\s*({_DECIMAL})\s*i")
_IMAG_RE = re.compile(rf"({_DECIMAL})\s*i")
_REAL_RE = re.compile(_DECIMAL)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*†?")
_UINT_RE = re.compile(r"\d+")

_ALIASES = {"a": "a", "ad": "ad", "a†": "ad", "q": "q", "p": "p"}


class ParseError(ValueError):
    """Syntax error with the 0-based character offset where it was detected."""

    def __init__(self, message: str, position: int, source: str):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}: {source!r}")


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0

    def error(self, msg: str):
        raise ParseError(msg, self.pos, self.src)

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def parse(self) -> OpExpr:
        e = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return e

    def expr(self) -> OpExpr:
        terms, signs = [], []
        sign = 1
        if self.peek() == "-":
            self.pos += 1
            sign = -1
        terms.append(self.term())
        signs.append(sign)
        while self.peek() in ("+", "-"):
            signs.append(1 if self.src[self.pos] == "+" else -1)
            self.pos += 1
            terms.append(self.term())
        if len(terms) == 1 and signs[0] == 1:
            return terms[0]
        return Sum(tuple(terms), tuple(signs))

    def term(self) -> OpExpr:
        factors = [self.factor()]
        while self.peek() == "*":
            self.pos += 1
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def factor(self) -> OpExpr:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            self.skip_ws()
            m = _UINT_RE.match(self.src, self.pos)
            if not m:
                self.error("expected unsigned integer exponent")
            self.pos = m.end()
            return Power(base, int(m.group()))
        return base

    def atom(self) -> OpExpr:
        ch = self.peek()
        if not ch:
            self.error("unexpected end of input")
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if ch == "[":
            self.pos += 1
            left = self.expr()
            self.expect(",")
            right = self.expr()
            self.expect("]")
            return Commutator(left, right)
        if ch.isdigit() or ch == ".":
            return self.number()
        m = _IDENT_RE.match(self.src, self.pos)
        if m:
            name = m.group()
            if name == "dag":
                self.pos = m.end()
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return Dagger(e)
            if name in _ALIASES:
                self.pos = m.end()
                return Atom(_ALIASES[name])
            self.error(f"unknown atom {name!r}")
        self.error(f"unexpected {ch!r}")

    def number(self) -> Scalar:
        m = _COMPLEX_RE.match(self.src, self.pos)
        if m:
            self.pos = m.end()
            im = float(m.group(3)) * (1 if m.group(2) == "+" else -1)
            return Scalar(complex(float(m.group(1)), im))
        m = _IMAG_RE.match(self.src, self.pos)
        if m:
            self.pos = m.end()
            return Scalar(complex(0.0, float(m.group(1))))
        m = _REAL_RE.match(self.src, self.pos)
        if not m:
            self.error("malformed number")
        self.pos = m.end()
        return Scalar(float(m.group()))


def parse(src: str) -> OpExpr:
    """Parse ``src`` into an expression tree.

    >>> parse("a*ad")
    Product(factors=(Atom(name='a'), Atom(name='ad')))
    """
    if not isinstance(src, str):
        raise TypeError("source must be a string")
    return _Parser(src).parse()
