"""Seeded generators for random words, hermitian polynomials and states."""

from __future__ import annotations

import numpy as np

from .expr import ADAG, A, Atom, Commutator, Dagger, OpExpr, Power, Product, Scalar, Sum
from .opalg import NormalPoly


def random_word(rng: np.random.Generator, max_len: int = 8) -> OpExpr:
    """Product of 1..``max_len`` ladder atoms."""
    k = int(rng.integers(1, max_len + 1))
    letters = [A if b else ADAG for b in rng.integers(0, 2, size=k)]
    return letters[0] if k == 1 else Product(tuple(letters))


def random_poly(rng: np.random.Generator, degree: int = 3, scale: float = 1.0) -> NormalPoly:
    terms = {}
    for m in range(degree + 1):
        for n in range(degree + 1 - m):
            re, im = rng.normal(size=2)
            terms[(m, n)] = scale * complex(re, im)
    return NormalPoly(terms)


def random_hermitian(rng: np.random.Generator, degree: int = 3, scale: float = 1.0) -> NormalPoly:
    """Exactly hermitian: coefficient ``(m, n)`` is the conjugate of ``(n, m)``."""
    X = random_poly(rng, degree, scale)
    return 0.5 * (X + X.dagger())


def random_density(rng: np.random.Generator, N: int, rank: int | None = None) -> np.ndarray:
    G = rng.normal(size=(N, rank or N)) + 1j * rng.normal(size=(N, rank or N))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_expr(rng: np.random.Generator, depth: int = 3) -> OpExpr:
    """Random tree over every node type the parser can produce."""
    if depth <= 0 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.7:
            return Atom(str(rng.choice(["a", "ad", "q", "p"])))
        re = float(np.round(rng.normal(), 3))
        im = float(np.round(rng.normal(), 3)) if rng.random() < 0.5 else 0.0
        return Scalar(complex(re, im))
    kind = rng.integers(0, 5)
    if kind == 0:
        k = int(rng.integers(2, 4))
        terms = tuple(random_expr(rng, depth - 1) for _ in range(k))
        signs = tuple(int(s) for s in rng.choice([1, -1], size=k))
        return Sum(terms, signs)
    if kind == 1:
        k = int(rng.integers(2, 4))
        return Product(tuple(random_expr(rng, depth - 1) for _ in range(k)))
    if kind == 2:
        return Power(random_expr(rng, depth - 1), int(rng.integers(0, 4)))
    if kind == 3:
        return Commutator(random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    return Dagger(random_expr(rng, depth - 1))
