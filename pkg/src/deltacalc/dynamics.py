"""Time evolution and variational diagnostics.

Conventions:

* states evolve as ``phi(t) = exp(itH) phi(0)`` (REAL) or
  ``exp(-tau H) phi(0)`` (EUCLIDEAN);
* operators evolve as ``A(t) = exp(itH) A exp(-itH)``, so ``dA/dt = i[H, A]``;
* the Hamilton form pairs ``da/dt = -i dH/da+`` and ``da+/dt = i dH/da``.
  The unswapped pairing is available as ``pairing="literal"``.

The diagnostics (Euler-Lagrange, Hamilton-Jacobi, Clark-Ocone) report
residuals instead of asserting them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .fock import (
    FockMatrix,
    _asarray,
    _check_dim,
    expm_hermitian,
    materialize,
    max_norm,
)
from .opalg import (
    NormalPoly,
    Var,
    commutator,
    delta_deriv,
    delta_integral,
    from_pq,
    normal_order,
    phase_rotate,
)
from .expr import P, Q
from .reports import DiagnosticReport

FD_STEP = 1e-5
DIAGNOSTIC_DIM = 32


class EvolutionMode(str, Enum):
    REAL = "real"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Hermitian generator; ``omega`` is set for the free oscillator."""

    poly: NormalPoly
    omega: float | None = None

    def __post_init__(self):
        if not isinstance(self.poly, NormalPoly):
            object.__setattr__(self, "poly", normal_order(self.poly))
        if not self.poly.is_hermitian():
            raise ValueError("Hamiltonian polynomial must equal its hermitian conjugate")

    @classmethod
    def free(cls, omega: float = 1.0) -> "HamiltonianSpec":
        """``omega (a+ a + 1/2)``."""
        if not omega > 0:
            raise ValueError(f"omega must be positive, got {omega!r}")
        return cls(NormalPoly({(1, 1): omega, (0, 0): 0.5 * omega}), float(omega))

    def matrix(self, N: int) -> FockMatrix:
        return materialize(self.poly, N)


HamiltonianLike = Union[HamiltonianSpec, NormalPoly, FockMatrix, np.ndarray]


def _hamiltonian_matrix(H: HamiltonianLike, N: int | None) -> np.ndarray:
    if isinstance(H, HamiltonianSpec):
        H = H.poly
    if isinstance(H, NormalPoly):
        if N is None:
            raise ValueError("a dimension is required to materialize a symbolic Hamiltonian")
        if not H.is_hermitian():
            raise ValueError("Hamiltonian polynomial must be hermitian")
        return materialize(H, N).entries
    M = _asarray(H)
    if N is not None and M.shape[0] != N:
        raise ValueError(f"dimension mismatch: matrix {M.shape[0]} vs requested {N}")
    return M


# -- state evolution --------------------------------------------------------


def evolve_state(H: HamiltonianLike, phi, time: float, mode=EvolutionMode.REAL, dim: int | None = None):
    """Evolve coefficient vector ``phi`` by ``exp(itH)`` or ``exp(-tau H)``."""
    mode = EvolutionMode(mode)
    phi = np.asarray(phi, dtype=complex)
    N = _check_dim(dim if dim is not None else phi.shape[0])
    if phi.shape != (N,):
        raise ValueError(f"state has shape {phi.shape}, expected ({N},)")
    M = _hamiltonian_matrix(H, N)
    if mode is EvolutionMode.REAL:
        if abs(np.linalg.norm(phi) - 1.0) > 1e-10:
            raise ValueError("REAL-mode evolution needs a normalized state")
        return expm_hermitian(M, 1j * time) @ phi
    return expm_hermitian(M, -time) @ phi


def ou_evolve(c, omega: float, tau: float) -> np.ndarray:
    """Ornstein-Uhlenbeck flow ``c_n -> exp(-omega (n + 1/2) tau) c_n``."""
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau!r}")
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    c = np.asarray(c, dtype=complex)
    n = np.arange(c.shape[0])
    return np.exp(-omega * (n + 0.5) * tau) * c


def heisenberg_evolve(H: HamiltonianLike, A, t: float) -> FockMatrix:
    """``exp(itH) A exp(-itH)``."""
    A_ = _asarray(A)
    M = _hamiltonian_matrix(H, A_.shape[0])
    U = expm_hermitian(M, -1j * t)
    return FockMatrix(U.conj().T @ A_ @ U)


def heisenberg_rhs(H, A) -> NormalPoly:
    """``i [H, A]``."""
    return 1j * commutator(H, A)


def hamilton_rhs(H, pairing: str = "adopted") -> tuple[NormalPoly, NormalPoly]:
    """Time derivatives ``(da/dt, da+/dt)`` from delta-derivatives of ``H``.

    ``adopted``: ``i da/dt = dH/da+`` and ``-i da+/dt = dH/da``, which agrees
    with ``i[H, .]``.  ``literal``: ``i da/dt = dH/da`` and
    ``-i da+/dt = dH/da+``.
    """
    dH_da = delta_deriv(H, Var.A)
    dH_dad = delta_deriv(H, Var.ADAG)
    if pairing == "adopted":
        return -1j * dH_dad, 1j * dH_da
    if pairing == "literal":
        return -1j * dH_da, 1j * dH_dad
    raise ValueError(f"pairing must be 'adopted' or 'literal', got {pairing!r}")


def energy_series(H: HamiltonianLike, phi0, times: Sequence[float], dim: int | None = None):
    """``<phi(t), H phi(t)>`` for each time and the largest drift from the first value."""
    phi0 = np.asarray(phi0, dtype=complex)
    N = _check_dim(dim if dim is not None else phi0.shape[0])
    M = _hamiltonian_matrix(H, N)
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    c0 = V.conj().T @ phi0
    energies = []
    for t in times:
        phit = V @ (np.exp(1j * t * w) * c0)
        energies.append(float(np.vdot(phit, M @ phit).real))
    deviation = max((abs(e - energies[0]) for e in energies), default=0.0)
    return energies, deviation


# -- action and Lagrangian --------------------------------------------------


@dataclass(frozen=True, eq=False)
class ActionOperator:
    S: FockMatrix
    E: float
    t: float
    poly: NormalPoly
    omega: float


def _action_poly(omega: float, t: float, E: float) -> NormalPoly:
    base = NormalPoly({(0, 2): 1 / 4j, (2, 0): -1 / 4j})
    return phase_rotate(base, omega * t) + (1 / 2j - E * t)


def action_operator(omega: float, t: float, E: float = 0.0, dim: int = DIAGNOSTIC_DIM) -> ActionOperator:
    """``(a(t)^2 - a+(t)^2)/4i - E t + 1/2i`` with ``a(t) = exp(-i omega t) a``."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    poly = _action_poly(omega, t, E)
    return ActionOperator(materialize(poly, dim), float(E), float(t), poly, float(omega))


def action_momentum(S: ActionOperator | NormalPoly, chain: str = "inverse") -> NormalPoly:
    """Coordinate derivative of the action by the ladder chain rule.

    ``a = (q + i p)/sqrt2`` gives ``da/dq = da+/dq = 1/sqrt2``.  ``inverse``
    multiplies by the reciprocal factors, ``direct`` by the factors themselves.
    """
    poly = S.poly if isinstance(S, ActionOperator) else S
    dS_da = delta_deriv(poly, Var.A)
    dS_dad = delta_deriv(poly, Var.ADAG)
    factor = {"inverse": math.sqrt(2.0), "direct": 1 / math.sqrt(2.0)}.get(chain)
    if factor is None:
        raise ValueError(f"chain must be 'inverse' or 'direct', got {chain!r}")
    return factor * (dS_da + dS_dad)


def lagrangian_density(H, adot, adagdot) -> NormalPoly:
    """``(1/2i)(a adot - a+ adagdot) - H`` with independent velocity polynomials."""
    a, ad = NormalPoly.a(), NormalPoly.adag()
    return (1 / 2j) * (a * adot - ad * adagdot) - H


def lagrangian_pq(H) -> NormalPoly:
    """``(p q + q p)/2 - H`` converted from position/momentum form."""
    return from_pq(0.5 * (P * Q + Q * P)) - H


def _norm_report(polys: dict, dim: int):
    norms = {}
    for name, p in polys.items():
        M = materialize(p, dim)
        norms[name] = max_norm(M, M.exact_upto)
    return norms


def euler_lagrange_residual(H, dim: int = DIAGNOSTIC_DIM) -> DiagnosticReport:
    """Compare the Hamilton form of the equations of motion with ``i[H, .]``.

    ``residual_norm`` uses the adopted pairing; the literal pairing's residual
    is reported under ``extras``.
    """
    a, ad = NormalPoly.a(), NormalPoly.adag()
    da, dad = hamilton_rhs(H)
    la, lad = hamilton_rhs(H, "literal")
    ha, had = heisenberg_rhs(H, a), heisenberg_rhs(H, ad)
    res_a, res_ad = da - ha, dad - had
    lit_a, lit_ad = la - ha, lad - had
    norms = _norm_report(
        {"hamilton_a": da, "hamilton_adag": dad, "heisenberg_a": ha, "heisenberg_adag": had}, dim
    )
    res = _norm_report({"a": res_a, "adag": res_ad, "lit_a": lit_a, "lit_adag": lit_ad}, dim)
    residual = materialize(res_a if res["a"] >= res["adag"] else res_ad, dim)
    return DiagnosticReport(
        terms=norms,
        residual_norm=max(res["a"], res["adag"]),
        dim=dim,
        mode="adopted",
        extras={
            "residual_a": res_a,
            "residual_adag": res_ad,
            "literal_residual_a": lit_a,
            "literal_residual_adag": lit_ad,
            "literal_residual_norm": max(res["lit_a"], res["lit_adag"]),
        },
        residual=residual,
    )


def _free_poly(omega: float) -> NormalPoly:
    return HamiltonianSpec.free(omega).poly


def covariant_velocity(H) -> NormalPoly:
    """``(dH/da a + a+ dH/da+)/2``, symmetrized to its hermitian part."""
    a, ad = NormalPoly.a(), NormalPoly.adag()
    X = 0.5 * (delta_deriv(H, Var.A) * a + ad * delta_deriv(H, Var.ADAG))
    return 0.5 * (X + X.dagger())


def hj_residual(omega: float, t: float, dim: int = DIAGNOSTIC_DIM, E: float = 0.0, step: float = FD_STEP) -> DiagnosticReport:
    """Hamilton-Jacobi check ``dS/dt - V + H`` for the free oscillator.

    ``dS/dt`` is a central difference of the materialized action; ``V`` is
    the covariant correction built from ``H = omega (a+ a + 1/2)``.
    """
    H = _free_poly(omega)
    dS = (action_operator(omega, t + step, E, dim).S - action_operator(omega, t - step, E, dim).S) * (1 / (2 * step))
    # the correction is evaluated with Heisenberg operators at time t
    X = 0.5 * (delta_deriv(H, Var.A) * NormalPoly.a() + NormalPoly.adag() * delta_deriv(H, Var.ADAG))
    Vt = materialize(phase_rotate(X, omega * t), dim)
    Hm = materialize(H, dim)
    residual = dS - Vt + Hm
    k = residual.exact_upto
    return DiagnosticReport(
        terms={"dS_dt": max_norm(dS, k), "correction": max_norm(Vt, k), "H": max_norm(Hm, k)},
        residual_norm=max_norm(residual, k),
        dim=dim,
        mode="real",
        extras={"omega": omega, "t": t, "E": E, "step": step, "exact_upto": k},
        residual=residual,
    )


# -- semigroups and reconstruction -----------------------------------------


def semigroup_check(H: HamiltonianLike, t: float, T: float, dim: int | None = None) -> float:
    """``max |exp(-T H) - exp(-t H) exp(-(T-t) H)|``."""
    if not 0 <= t <= T:
        raise ValueError(f"need 0 <= t <= T, got t={t!r}, T={T!r}")
    M = _hamiltonian_matrix(H, dim)
    lhs = expm_hermitian(M, -T)
    rhs = expm_hermitian(M, -t) @ expm_hermitian(M, -(T - t))
    return max_norm(lhs - rhs)


@dataclass(frozen=True, eq=False)
class ClarkOconeReport:
    residual: NormalPoly
    lam: complex
    expectation: complex | None = None
    dim: int | None = None

    def to_dict(self) -> dict:
        from .reports import jsonable

        return {
            "residual": jsonable(self.residual),
            "lambda": jsonable(complex(self.lam)),
            "expectation": None if self.expectation is None else jsonable(complex(self.expectation)),
            "dim": self.dim,
        }


def clark_ocone_residual(H, lam: complex = 0.0, phi=None, psi=None) -> ClarkOconeReport:
    """``H - (int dH/da da + int dH/da+ da+ + lam)`` and optionally ``<phi, R psi>``."""
    H = normal_order(H)
    rebuilt = delta_integral(delta_deriv(H, Var.A), Var.A) + delta_integral(delta_deriv(H, Var.ADAG), Var.ADAG)
    R = H - rebuilt - complex(lam)
    if phi is None:
        return ClarkOconeReport(R, complex(lam))
    phi = np.asarray(phi, dtype=complex)
    psi = phi if psi is None else np.asarray(psi, dtype=complex)
    N = phi.shape[0]
    val = complex(np.vdot(phi, materialize(R, N).entries @ psi))
    return ClarkOconeReport(R, complex(lam), val, N)


@dataclass(frozen=True)
class BakerHausdorffReport:
    standard_error: float
    variant_error: float
    alpha: complex
    beta: complex
    dim: int
    block: int

    def to_dict(self) -> dict:
        return {
            "standard_error": self.standard_error,
            "variant_error": self.variant_error,
            "alpha": [self.alpha.real, self.alpha.imag],
            "beta": [self.beta.real, self.beta.imag],
            "dim": self.dim,
            "block": self.block,
        }


def baker_hausdorff_check(alpha: complex, beta: complex, dim: int = 96, block: int = 20) -> BakerHausdorffReport:
    """Compare ``exp(A+B)`` with ``exp(A) exp(B) exp(c [A,B])`` for ``A = alpha a``, ``B = beta a+``.

    ``c = -1/2`` is the standard identity; ``c = 1`` is the variant without the
    factor.  Both errors are measured on the low block, away from truncation.
    """
    import scipy.linalg

    from .fock import annihilation, creation

    alpha, beta = complex(alpha), complex(beta)
    Am, Bm = alpha * annihilation(dim), beta * creation(dim)
    lhs = scipy.linalg.expm(Am + Bm)
    prod = scipy.linalg.expm(Am) @ scipy.linalg.expm(Bm)
    central = alpha * beta  # [alpha a, beta a+] = alpha beta
    std = prod * np.exp(-0.5 * central)
    var = prod * np.exp(central)
    return BakerHausdorffReport(
        max_norm(lhs - std, block), max_norm(lhs - var, block), alpha, beta, dim, block
    )
