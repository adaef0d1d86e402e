"""Density-matrix dynamics on the truncated Fock space.

The Liouvillian is stored as a 4-tensor ``theta[m, n, j, k]``:

    theta[m, n, j, k] = H[m, j] d[n, k] - d[m, j] H[k, n] - d[k, n] V[m, j]

so that contracting over ``(j, k)`` gives ``H rho - rho H - V rho``.  With
the ``V`` term switched off, ``i theta rho`` is the von Neumann flow
``i [H, rho]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock
from .dynamics import covariant_velocity
from .fock import (
    FockMatrix,
    _asarray,
    _check_dim,
    expm_hermitian,
    gauss_legendre,
    hermite_functions,
    materialize,
    max_norm,
)
from .opalg import NormalPoly, Var, delta_deriv, hermitian_conjugate, normal_order
from .reports import DiagnosticReport, matrix_json


def _same_shape(*Ms) -> int:
    shapes = {M.shape for M in Ms}
    if len(shapes) != 1:
        raise ValueError(f"dimension mismatch: {sorted(shapes)}")
    return Ms[0].shape[0]


def von_neumann_rhs(H, rho) -> FockMatrix:
    """``i (H rho - rho H)``."""
    H_, r = _asarray(H), _asarray(rho)
    _same_shape(H_, r)
    return FockMatrix(1j * (H_ @ r - r @ H_))


@dataclass(frozen=True, eq=False)
class SuperOp:
    """Four-index superoperator acting on ``N x N`` matrices."""

    tensor: np.ndarray
    include_V: bool = False

    def __post_init__(self):
        T = np.array(self.tensor, dtype=complex)
        N = T.shape[0]
        if T.shape != (N,) * 4:
            raise ValueError(f"superoperator tensor must have shape (N,N,N,N), got {T.shape}")
        T.setflags(write=False)
        object.__setattr__(self, "tensor", T)

    @property
    def dim(self) -> int:
        return self.tensor.shape[0]

    def matrix(self) -> np.ndarray:
        """``N^2 x N^2`` matrix acting on row-major vectorized operators."""
        N = self.dim
        return self.tensor.reshape(N * N, N * N)

    def apply(self, rho) -> np.ndarray:
        r = _asarray(rho)
        if r.shape != (self.dim, self.dim):
            raise ValueError(f"dimension mismatch: {r.shape} vs superoperator dim {self.dim}")
        return np.einsum("mnjk,jk->mn", self.tensor, r)

    def __call__(self, rho) -> np.ndarray:
        return self.apply(rho)

    def to_dict(self) -> dict:
        return matrix_json(self.matrix())


def build_liouvillian(H, V=None, include_V: bool = False) -> SuperOp:
    """Assemble the Liouvillian tensor from matrices ``H`` and ``V``."""
    H_ = fock._require_hermitian(H)
    N = H_.shape[0]
    I = np.eye(N, dtype=complex)
    T = np.einsum("mj,nk->mnjk", H_, I) - np.einsum("mj,kn->mnjk", I, H_)
    if include_V:
        if V is None:
            raise ValueError("include_V requires a V matrix")
        V_ = fock._require_hermitian(V)
        _same_shape(H_, V_)
        T = T - np.einsum("kn,mj->mnjk", I, V_)
    return SuperOp(T, include_V)


def series_evolve(theta: SuperOp, rho0, t: float, order: int) -> FockMatrix:
    """Truncated expansion ``sum_{j<=order} (it)^j theta^j rho0 / j!``."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order!r}")
    term = _asarray(rho0).copy()
    acc = term.copy()
    for j in range(1, order + 1):
        term = (1j * t / j) * theta.apply(term)
        acc = acc + term
    return FockMatrix(acc)


def exact_conjugation(H, rho0, t: float) -> np.ndarray:
    """``exp(itH) rho0 exp(-itH)``."""
    U = expm_hermitian(H, 1j * t)
    return U @ _asarray(rho0) @ U.conj().T


# -- divergence, velocity, current -----------------------------------------


def parity_divergence(rho, dim: int | None = None) -> FockMatrix:
    """``(p rho + rho p) / 2`` with ``p`` acting from the left and from the right."""
    r = _asarray(rho)
    N = _check_dim(dim if dim is not None else r.shape[0])
    p = fock.momentum(N)
    _same_shape(p, r)
    return FockMatrix(0.5 * (p @ r + r @ p))


def _left(X, rho):
    return X @ rho


def _right(X, rho):
    # right-acting ladder operators carry a sign: rho -> -rho X
    return -(rho @ X)


def parity_divergence_ladder(rho, dim: int | None = None) -> FockMatrix:
    """Same divergence assembled from the four left/right ladder actions."""
    r = _asarray(rho)
    N = _check_dim(dim if dim is not None else r.shape[0])
    a, ad = fock.annihilation(N), fock.creation(N)
    total = _left(a, r) - _left(ad, r) - _right(a, r) + _right(ad, r)
    return FockMatrix(total / (2 * math.sqrt(2.0) * 1j))


def velocity_operator(H) -> NormalPoly:
    """``i (dH/da - d(H+)/da+)``; hermitian whenever ``H`` is."""
    H = normal_order(H)
    return 1j * (delta_deriv(H, Var.A) - delta_deriv(hermitian_conjugate(H), Var.ADAG))


def current(H, rho, dim: int | None = None) -> FockMatrix:
    """``j = v rho``."""
    r = _asarray(rho)
    N = _check_dim(dim if dim is not None else r.shape[0])
    v = materialize(velocity_operator(H), N)
    _same_shape(v.entries, r)
    return FockMatrix(v.entries @ r)


def _shared_degree(H: NormalPoly) -> int:
    # v has degree deg(H) - 1 and the divergence adds one more ladder factor
    return max(H.degree(), 1) + 1


def continuity_residual(H, rho, dim: int | None = None) -> DiagnosticReport:
    """Compare ``i[H, rho]`` with ``-div(v rho)``.

    Also reports the factorization defect of the full tensor (with the ``V``
    term built from the covariant velocity) against ``-div(v rho)``.
    """
    H = normal_order(H)
    r = _asarray(rho)
    N = _check_dim(dim if dim is not None else r.shape[0])
    Hm = materialize(H, N)
    lhs = von_neumann_rhs(Hm, r)
    rhs = -parity_divergence(current(H, r, N), N)
    Vm = materialize(covariant_velocity(H), N)
    full = 1j * build_liouvillian(Hm, Vm, include_V=True).apply(r)
    k = N - 1 - _shared_degree(H)
    residual = FockMatrix((lhs - rhs).entries, N - 1 - k)
    defect = full - rhs.entries
    return DiagnosticReport(
        terms={"lhs": max_norm(lhs, k), "rhs": max_norm(rhs, k), "factorization_defect": max_norm(defect, k)},
        residual_norm=max_norm(residual, k),
        dim=N,
        mode="real",
        extras={"exact_upto": k, "trace_lhs": complex(np.trace(lhs.entries))},
        residual=residual,
    )


# -- Hermite realization and the boundary lemma ----------------------------


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Gauss-Legendre grid on ``[-L, L]`` with Hermite functions up to ``nmax``."""

    L: float
    nodes: int
    nmax: int = 20

    def __post_init__(self):
        x, w = gauss_legendre(self.L, self.nodes)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "psi", hermite_functions(self.nmax, x))

    def integrate(self, f) -> complex:
        return np.sum(self.weights * np.asarray(f))

    def gram(self, nmax: int | None = None) -> np.ndarray:
        k = self.nmax if nmax is None else nmax
        P = self.psi[: k + 1]
        return (P * self.weights) @ P.T

    def tail_mass(self, n: int) -> float:
        """``1 - int_{-L}^{L} psi_n^2``."""
        return float(1.0 - self.integrate(self.psi[n] ** 2))


TAIL_TOL = 1e-8
BOUNDARY_TOL = 1e-10


def gauss_boundary_check(H, levels=range(13), L: float = 8.0, nodes: int = 2048, include_V: bool = False) -> DiagnosticReport:
    """Boundary-current lemma and the Gauss identity on ``[-L, L]``.

    The closed surface is the endpoint pair with outward normals ``-1`` at
    ``-L`` and ``+1`` at ``+L``.

    * ``boundary_current``: ``max |sum_x n(x) phi_k(x) (v phi_j)(x)|`` over
      ``k, j`` in ``levels``.
    * ``volume``/``surface``: for ``T_mnj(x) = sum_k theta[m,n,j,k] phi_k(x)``,
      the interior integral ``int T dx`` and the endpoint term
      ``-sum_x n(x) T(x)``; the report gives the largest difference.
    """
    if L < 6:
        raise ValueError(f"half-width L must be >= 6, got {L!r}")
    if nodes < 512:
        raise ValueError(f"need at least 512 quadrature nodes, got {nodes!r}")
    H = normal_order(H)
    levels = sorted(set(int(k) for k in levels))
    if not levels or levels[0] < 0:
        raise ValueError("levels must be a non-empty set of non-negative integers")
    top = levels[-1]
    d = max(H.degree(), 1)
    nmax = top + d
    N = nmax + 1
    grid = QuadratureGrid(L, nodes, nmax)
    worst_tail = max(grid.tail_mass(n) for n in range(nmax + 1))
    if worst_tail > TAIL_TOL:
        raise ValueError(
            f"L={L} too small for levels <= {top}: Hermite tail mass {worst_tail:.3g} exceeds {TAIL_TOL:g}"
        )

    ends = np.array([-L, L])
    normals = np.array([-1.0, 1.0])
    psi_end = hermite_functions(nmax, ends)  # (nmax+1, 2)

    v = materialize(velocity_operator(H), N).entries
    v_psi_end = v.T @ psi_end  # row j: (v phi_j)(x) = sum_l v[l, j] phi_l(x)
    lv = np.array(levels)
    J = np.einsum("kx,jx,x->kj", psi_end[lv], v_psi_end[lv], normals)
    boundary = float(np.max(np.abs(J))) if J.size else 0.0

    Hm = materialize(H, N).entries
    Vm = materialize(covariant_velocity(H), N).entries if include_V else None
    theta = build_liouvillian(Hm, Vm, include_V).tensor[np.ix_(lv, lv, lv)]
    vol = np.einsum("mnjk,k->mnj", theta, grid.psi @ grid.weights)
    surf = -np.einsum("mnjk,kx,x->mnj", theta, psi_end, normals)
    diff = float(np.max(np.abs(vol - surf)))
    return DiagnosticReport(
        terms={
            "boundary_current": boundary,
            "volume": float(np.max(np.abs(vol))),
            "surface": float(np.max(np.abs(surf))),
        },
        residual_norm=diff,
        dim=N,
        mode="real",
        extras={"L": L, "nodes": nodes, "levels": levels, "tail_mass": worst_tail, "include_V": include_V},
    )
