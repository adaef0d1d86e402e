"""Truncated Fock-space realization.

Operators live on the span of ``|e_0>, ..., |e_{N-1}>`` with
``a|e_n> = sqrt(n)|e_{n-1}>``.  A normal-ordered monomial of total degree
``d`` is reproduced exactly on indices ``<= N-1-d``; operator *words* (the
raw product of truncated ``a`` and ``a+`` matrices) carry the usual
truncation artifact at the top of the spectrum, e.g. ``[a, a+]`` has
``-(N-1)`` in its last diagonal entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np
import scipy.linalg
from scipy.special import roots_legendre

from .expr import (
    Atom,
    Commutator,
    Dagger,
    OpExpr,
    Power,
    Product,
    Scalar,
    Sum,
    word_degree,
)
from .opalg import NormalPoly, normal_order

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


class TruncationError(ValueError):
    """Requested operator degree leaves no exactly represented indices."""


def _check_dim(N) -> int:
    if int(N) != N or N < 2:
        raise ValueError(f"Fock dimension must be an integer >= 2, got {N!r}")
    return int(N)


def _asarray(M) -> np.ndarray:
    if isinstance(M, FockMatrix):
        return M.entries
    return np.asarray(M, dtype=complex)


@dataclass(frozen=True, eq=False)
class FockMatrix:
    """Dense N x N operator matrix.

    ``degree`` is the operator degree the matrix was built from; it fixes the
    guaranteed-exact index range ``0..exact_upto``.  ``None`` means no
    guarantee is tracked (e.g. after exponentiation).  ``hermitian`` and
    ``unitary`` are advisory tags, verified when set.
    """

    entries: np.ndarray
    degree: int | None = None
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        M = np.array(self.entries, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"FockMatrix must be square, got shape {M.shape}")
        _check_dim(M.shape[0])
        M.setflags(write=False)
        object.__setattr__(self, "entries", M)
        if self.hermitian and hermiticity_defect(M) > HERMITIAN_TOL * max(1.0, _maxabs(M)):
            raise ValueError("matrix tagged hermitian is not hermitian")
        if self.unitary and _maxabs(M.conj().T @ M - np.eye(M.shape[0])) > UNITARY_TOL:
            raise ValueError("matrix tagged unitary is not unitary")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def exact_upto(self) -> int | None:
        """Largest index ``k`` such that the block ``[:k+1, :k+1]`` is exact."""
        if self.degree is None:
            return None
        return self.dim - 1 - self.degree

    def exact_block(self) -> np.ndarray:
        k = self.exact_upto
        if k is None or k < 0:
            raise TruncationError("no exactly represented indices")
        return self.entries[: k + 1, : k + 1]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def dag(self) -> "FockMatrix":
        return FockMatrix(self.entries.conj().T, self.degree)

    def _deg(self, other, op):
        d2 = other.degree if isinstance(other, FockMatrix) else None
        if self.degree is None or d2 is None:
            return None
        return op(self.degree, d2)

    def __matmul__(self, other):
        return FockMatrix(self.entries @ _asarray(other), self._deg(other, lambda x, y: x + y))

    def __add__(self, other):
        return FockMatrix(self.entries + _asarray(other), self._deg(other, max))

    def __sub__(self, other):
        return FockMatrix(self.entries - _asarray(other), self._deg(other, max))

    def __neg__(self):
        return FockMatrix(-self.entries, self.degree)

    def __mul__(self, c):
        if not isinstance(c, (int, float, complex)):
            return NotImplemented
        return FockMatrix(self.entries * c, self.degree)

    __rmul__ = __mul__

    def __repr__(self):
        return f"FockMatrix(dim={self.dim}, degree={self.degree})"


def _maxabs(M) -> float:
    M = np.asarray(M)
    return float(np.max(np.abs(M))) if M.size else 0.0


def hermiticity_defect(M) -> float:
    M = _asarray(M)
    return _maxabs(M - M.conj().T)


def max_norm(M, upto: int | None = None) -> float:
    """Max-abs entry, optionally restricted to the block ``[:upto+1, :upto+1]``."""
    M = _asarray(M)
    if upto is not None:
        M = M[: upto + 1, : upto + 1]
    return _maxabs(M)


# -- ladder matrices --------------------------------------------------------


def annihilation(N: int) -> np.ndarray:
    """``a`` with ``a[n-1, n] = sqrt(n)``."""
    N = _check_dim(N)
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1).astype(complex)


def creation(N: int) -> np.ndarray:
    return annihilation(N).T.copy()


def position(N: int) -> np.ndarray:
    a = annihilation(N)
    return (a.T + a) / math.sqrt(2.0)


def momentum(N: int) -> np.ndarray:
    a = annihilation(N)
    return (a - a.T) / (math.sqrt(2.0) * 1j)


def rounded_sqrt(num: int, den: int = 1) -> float:
    """Correctly rounded ``sqrt(num / den)`` for non-negative integers."""
    if num == 0:
        return 0.0
    bits = (num.bit_length() - den.bit_length()) // 2
    s = max(0, 66 - bits)
    q, rem = divmod(num << (2 * s), den)
    r = math.isqrt(q)
    sticky = 1 if (rem or r * r != q) else 0
    return math.ldexp(float((r << 1) | sticky), -s - 1)


def _signed_sqrt(S: Fraction, X: int) -> float:
    """Correctly rounded ``S * sqrt(X)``."""
    if not S:
        return 0.0
    v = rounded_sqrt(S.numerator * S.numerator * X, S.denominator * S.denominator)
    return v if S > 0 else -v


def _poly_matrix(p: NormalPoly, N: int) -> np.ndarray:
    # entry (i, j) of (a+)^m a^n is sqrt(i! j!) / (j-n)!, so all monomials
    # sharing the shift m-n combine exactly before the single final rounding
    fact = [math.factorial(k) for k in range(N)]
    by_shift: dict[int, list] = {}
    for (m, n), c in p.terms.items():
        by_shift.setdefault(m - n, []).append((n, Fraction(c.real), Fraction(c.imag)))
    M = np.zeros((N, N), dtype=complex)
    for shift, terms in by_shift.items():
        for j in range(max(0, -shift), min(N, N - shift)):
            i = j + shift
            re = im = Fraction(0)
            for n, cr, ci in terms:
                if n <= j:
                    re += cr / fact[j - n]
                    im += ci / fact[j - n]
            if re or im:
                X = fact[i] * fact[j]
                M[i, j] = complex(_signed_sqrt(re, X), _signed_sqrt(im, X))
    return M


def monomial_matrix(m: int, n: int, N: int) -> np.ndarray:
    """Matrix of ``(a+)^m a^n`` on the truncated space (exact compression)."""
    return _poly_matrix(NormalPoly.monomial(m, n), _check_dim(N))


def materialize(p: Union[NormalPoly, OpExpr], N: int) -> FockMatrix:
    """Matrix of ``p`` on ``N`` Fock levels.

    A :class:`NormalPoly` is materialized monomial by monomial in normal order.
    An un-evaluated :class:`OpExpr` is materialized as the literal product of
    truncated ``a``/``a+`` matrices, which is the independent word oracle.

    >>> from deltacalc.opalg import NormalPoly
    >>> np.real(np.diag(materialize(NormalPoly.number(), 3).entries))
    array([0., 1., 2.])
    """
    N = _check_dim(N)
    if isinstance(p, (int, float, complex)):
        p = NormalPoly.constant(p)
    if isinstance(p, NormalPoly):
        d = p.degree()
        if d >= N:
            raise TruncationError(f"degree {d} polynomial needs dimension > {d}, got {N}")
        return FockMatrix(_poly_matrix(p, N), d)
    if isinstance(p, OpExpr):
        d = word_degree(p)
        if d >= N:
            raise TruncationError(f"degree {d} expression needs dimension > {d}, got {N}")
        return FockMatrix(_word_matrix(p, N), d)
    p = normal_order(p)
    return materialize(p, N)


def _exact_word_matrix(letters: list[str], N: int) -> np.ndarray:
    # apply the word to each basis vector exactly, tracking squared amplitudes
    M = np.zeros((N, N), dtype=complex)
    for j in range(N):
        k, sq = j, 1
        for letter in reversed(letters):
            if letter == "a":
                if k == 0:
                    break
                sq *= k
                k -= 1
            else:
                k += 1
                if k >= N:
                    break
                sq *= k
        else:
            M[k, j] = rounded_sqrt(sq)
    return M


def _expand_words(e: OpExpr) -> dict | None:
    """Distribute ``e`` into ``{letters: coefficient}`` without reordering anything.

    Returns ``None`` when ``q`` or ``p`` occur.
    """
    if isinstance(e, Atom):
        return {(e.name,): 1.0} if e.name in ("a", "ad") else None
    if isinstance(e, Scalar):
        return {(): e.value}
    if isinstance(e, Sum):
        acc: dict = {}
        for t, sgn in zip(e.terms, e.signs):
            sub = _expand_words(t)
            if sub is None:
                return None
            for w, c in sub.items():
                acc[w] = acc.get(w, 0) + sgn * c
        return acc
    if isinstance(e, (Product, Power, Commutator)):
        if isinstance(e, Product):
            parts = [_expand_words(f) for f in e.factors]
        elif isinstance(e, Power):
            parts = [_expand_words(e.base)] * e.exponent
        else:
            x, y = _expand_words(e.left), _expand_words(e.right)
            if x is None or y is None:
                return None
            xy, yx = _word_product([x, y]), _word_product([y, x])
            for w, c in yx.items():
                xy[w] = xy.get(w, 0) - c
            return xy
        return None if any(p is None for p in parts) else _word_product(parts)
    if isinstance(e, Dagger):
        sub = _expand_words(e.operand)
        if sub is None:
            return None
        flip = {"a": "ad", "ad": "a"}
        return {tuple(flip[l] for l in reversed(w)): complex(c).conjugate() for w, c in sub.items()}
    raise TypeError(type(e).__name__)


def _word_product(parts: list[dict]) -> dict:
    acc: dict = {(): 1.0}
    for p in parts:
        nxt: dict = {}
        for w1, c1 in acc.items():
            for w2, c2 in p.items():
                nxt[w1 + w2] = nxt.get(w1 + w2, 0) + c1 * c2
        acc = nxt
    return acc


def _word_matrix(e: OpExpr, N: int) -> np.ndarray:
    words = _expand_words(e)
    if words is not None:
        M = np.zeros((N, N), dtype=complex)
        for letters, c in words.items():
            if c != 0:
                M += c * _exact_word_matrix(list(letters), N)
        return M
    if isinstance(e, Atom):
        return {"a": annihilation, "ad": creation, "q": position, "p": momentum}[e.name](N)
    if isinstance(e, Scalar):
        return e.value * np.eye(N, dtype=complex)
    if isinstance(e, Sum):
        acc = np.zeros((N, N), dtype=complex)
        for t, s in zip(e.terms, e.signs):
            acc = acc + s * _word_matrix(t, N)
        return acc
    if isinstance(e, Product):
        acc = _word_matrix(e.factors[0], N)
        for f in e.factors[1:]:
            acc = acc @ _word_matrix(f, N)
        return acc
    if isinstance(e, Power):
        return np.linalg.matrix_power(_word_matrix(e.base, N), e.exponent)
    if isinstance(e, Commutator):
        x, y = _word_matrix(e.left, N), _word_matrix(e.right, N)
        return x @ y - y @ x
    if isinstance(e, Dagger):
        return _word_matrix(e.operand, N).conj().T
    raise TypeError(type(e).__name__)


def matrix_commutator(X, Y) -> FockMatrix:
    X_, Y_ = _asarray(X), _asarray(Y)
    out = FockMatrix(X_ @ Y_ - Y_ @ X_)
    if isinstance(X, FockMatrix) and isinstance(Y, FockMatrix):
        return FockMatrix(out.entries, X._deg(Y, lambda x, y: x + y))
    return out


# -- exponentials -----------------------------------------------------------


def _require_hermitian(H) -> np.ndarray:
    M = _asarray(H)
    if hermiticity_defect(M) > HERMITIAN_TOL * max(1.0, _maxabs(M)):
        raise ValueError("operator is not hermitian within tolerance")
    return M


def expm_hermitian(H, z: complex) -> np.ndarray:
    """``exp(z H)`` for hermitian ``H`` by eigendecomposition."""
    M = _require_hermitian(H)
    if z == 0:
        return np.eye(M.shape[0], dtype=complex)
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    return (V * np.exp(z * w)) @ V.conj().T


def expm(M) -> np.ndarray:
    """Matrix exponential; eigendecomposition for hermitian input, else scaling-and-squaring."""
    M = _asarray(M)
    if hermiticity_defect(M) <= HERMITIAN_TOL * max(1.0, _maxabs(M)):
        return expm_hermitian(M, 1.0)
    return scipy.linalg.expm(M)


# -- states -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityMatrix(FockMatrix):
    """Hermitian, unit-trace, positive semidefinite FockMatrix."""

    tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        super().__post_init__()
        M = self.entries
        if hermiticity_defect(M) > self.tol:
            raise ValueError("density matrix must be hermitian")
        tr = np.trace(M)
        if abs(tr - 1.0) > self.tol:
            raise ValueError(f"density matrix must have unit trace, got {tr!r}")
        if np.linalg.eigvalsh(0.5 * (M + M.conj().T)).min() < -self.tol:
            raise ValueError("density matrix must be positive semidefinite")

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, n: int, N: int) -> "DensityMatrix":
        psi = np.zeros(_check_dim(N), dtype=complex)
        psi[n] = 1.0
        return cls.pure(psi)


def basis_state(n: int, N: int) -> np.ndarray:
    v = np.zeros(_check_dim(N), dtype=complex)
    v[n] = 1.0
    return v


def outer(m: int, n: int, N: int) -> np.ndarray:
    """``|e_m><e_n|`` (generally not a valid density matrix)."""
    M = np.zeros((_check_dim(N),) * 2, dtype=complex)
    M[m, n] = 1.0
    return M


@dataclass(frozen=True, eq=False)
class GibbsState:
    rho: DensityMatrix
    beta: float
    Z: float
    H_ref: FockMatrix


def gibbs_state(H, beta: float) -> GibbsState:
    """``rho = exp(-beta H) / Z`` with ``Z = Tr exp(-beta H)``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    M = _require_hermitian(H)
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    shifted = np.exp(-beta * (w - w[0]))
    s = shifted.sum()
    Z = math.exp(-beta * w[0]) * s
    if not (math.isfinite(Z) and Z > 0):
        raise ValueError("partition function is not a finite positive number")
    rho = (V * (shifted / s)) @ V.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    H_ref = H if isinstance(H, FockMatrix) else FockMatrix(M)
    return GibbsState(DensityMatrix(rho), float(beta), float(Z), H_ref)


def gns_inner(A, B, g: GibbsState) -> complex:
    """``<A, B> = Tr(A B+ rho)``."""
    A_, B_, rho = _asarray(A), _asarray(B), g.rho.entries
    if A_.shape != B_.shape or A_.shape != rho.shape:
        raise ValueError("dimension mismatch")
    return complex(np.einsum("ij,ji->", A_, B_.conj().T @ rho))


def gns_null_norm(A, g: GibbsState) -> float:
    """Frobenius norm of ``A+ rho^(1/2)``; its square equals ``<A, A>``."""
    w, V = np.linalg.eigh(g.rho.entries)
    sqrt_rho = (V * np.sqrt(np.clip(w, 0, None))) @ V.conj().T
    return float(np.linalg.norm(_asarray(A).conj().T @ sqrt_rho))


def expectation(A, rho) -> complex:
    """``Tr(A rho)``."""
    A_, r = _asarray(A), _asarray(rho)
    if A_.shape != r.shape:
        raise ValueError("dimension mismatch")
    return complex(np.einsum("ij,ji->", A_, r))


# -- Hermite functions ------------------------------------------------------


def hermite_functions(nmax: int, x) -> np.ndarray:
    """Normalized Hermite functions ``psi_0..psi_nmax`` at ``x``; shape ``(nmax+1, len(x))``.

    Orthonormal under Lebesgue measure; computed by the stable three-term
    recurrence ``psi_k = sqrt(2/k) x psi_{k-1} - sqrt((k-1)/k) psi_{k-2}``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((nmax + 1, x.size))
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(2, nmax + 1):
        out[k] = math.sqrt(2.0 / k) * x * out[k - 1] - math.sqrt((k - 1) / k) * out[k - 2]
    return out


@dataclass(frozen=True)
class HermiteState:
    n: int

    def __call__(self, x):
        return hermite_functions(self.n, x)[self.n]


def gauss_legendre(L: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[-L, L]``."""
    x, w = roots_legendre(nodes)
    return L * x, L * w
