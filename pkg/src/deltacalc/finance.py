"""Monte Carlo harness for stochastic-payoff valuation and market making.

Assets follow ``dU_i = (a_i + k_i U_i) dt + b_i dWt_i``; the payoff is a
random field ``F(x, t) = F0(x) + sum_i f_i(x) W_i(t)`` so that
``dF(x) = sum_i f_i(x) dW_i``.  Paths are generated block by block from
per-path Philox streams keyed by ``(seed, path)``, so an ensemble is the same
array whatever the block size or worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional

import numpy as np

from .opalg import NormalPoly

BLOCK = 2048


# -- model inputs -----------------------------------------------------------


def _vec(x, n=None, name="value") -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    if n is not None and v.shape[0] != n:
        if v.shape[0] == 1:
            return np.full(n, v[0])
        raise ValueError(f"{name} has length {v.shape[0]}, expected {n}")
    return v


@dataclass(frozen=True, eq=False)
class AssetSpec:
    """``dU_i = (drift_i + kappa_i U_i) dt + vol_i dWt_i``."""

    drift: np.ndarray
    vol: np.ndarray
    u0: np.ndarray
    kappa: Optional[np.ndarray] = None

    def __post_init__(self):
        drift = _vec(self.drift, name="drift")
        n = drift.shape[0]
        vol = _vec(self.vol, n, "vol")
        if np.any(vol < 0):
            raise ValueError("volatilities must be non-negative")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "vol", vol)
        object.__setattr__(self, "u0", _vec(self.u0, n, "u0"))
        kappa = np.zeros(n) if self.kappa is None else _vec(self.kappa, n, "kappa")
        object.__setattr__(self, "kappa", kappa)

    @property
    def n(self) -> int:
        return self.drift.shape[0]

    def drift_at(self, U: np.ndarray) -> np.ndarray:
        return self.drift + self.kappa * U


def _zeros_like_last(x, *extra):
    return np.zeros(np.shape(x)[:-1] + extra)


@dataclass(frozen=True, eq=False)
class PayoffSpec:
    """Payoff field ``F0`` with integrands ``f_i`` and their derivatives.

    Every callable takes states of shape ``(..., n)``.  ``jac_f[..., i, j]`` is
    ``d f_i / d x_j`` and ``hess_f[..., i, j, k]`` the second derivative.
    """

    n: int
    F0: Callable
    grad: Callable
    hess: Callable
    f: Callable
    jac_f: Callable
    hess_f: Optional[Callable] = None
    name: str = "custom"

    @classmethod
    def quadratic(cls, Q=None, g=None, c: float = 0.0, f0=None, fjac=None, n: int | None = None) -> "PayoffSpec":
        """``F0 = x.Q.x/2 + g.x + c`` with affine integrands ``f = f0 + fjac x``."""
        n = n or next(len(np.atleast_1d(v)) for v in (g, f0, Q, [0.0]) if v is not None)
        Q = np.zeros((n, n)) if Q is None else np.atleast_2d(np.asarray(Q, dtype=float))
        g = np.zeros(n) if g is None else _vec(g, n, "g")
        f0 = np.zeros(n) if f0 is None else _vec(f0, n, "f0")
        fj = np.zeros((n, n)) if fjac is None else np.atleast_2d(np.asarray(fjac, dtype=float))
        if Q.shape != (n, n) or fj.shape != (n, n):
            raise ValueError("Q and fjac must be n x n")
        Qs = 0.5 * (Q + Q.T)
        return cls(
            n,
            F0=lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, Qs, x) + x @ g + c,
            grad=lambda x: x @ Qs + g,
            hess=lambda x: np.broadcast_to(Qs, np.shape(x)[:-1] + (n, n)),
            f=lambda x: x @ fj.T + f0,
            jac_f=lambda x: np.broadcast_to(fj, np.shape(x)[:-1] + (n, n)),
            name="quadratic",
        )

    @classmethod
    def linear(cls, g, c: float = 0.0) -> "PayoffSpec":
        g = _vec(g, name="g")
        out = cls.quadratic(g=g, c=c, n=g.shape[0])
        return PayoffSpec(**{**out.__dict__, "name": "linear"})

    @classmethod
    def zero(cls, n: int = 1) -> "PayoffSpec":
        out = cls.quadratic(n=n)
        return PayoffSpec(**{**out.__dict__, "name": "zero"})

    @classmethod
    def from_functions(cls, n: int, F0: Callable, f: Callable | None = None, h: float = 1e-4) -> "PayoffSpec":
        """Build a payoff from plain functions, differentiating by central differences."""

        def grad(x):
            x = np.asarray(x, dtype=float)
            out = np.empty(x.shape)
            for i in range(n):
                e = np.zeros(n)
                e[i] = h
                out[..., i] = (F0(x + e) - F0(x - e)) / (2 * h)
            return out

        def hess(x):
            x = np.asarray(x, dtype=float)
            out = np.empty(x.shape + (n,))
            for i in range(n):
                e = np.zeros(n)
                e[i] = h
                out[..., i, :] = (grad(x + e) - grad(x - e)) / (2 * h)
            return out

        fz = f if f is not None else (lambda x: _zeros_like_last(x, n))

        def jac_f(x):
            x = np.asarray(x, dtype=float)
            out = np.empty(x.shape + (n,))
            for j in range(n):
                e = np.zeros(n)
                e[j] = h
                out[..., :, j] = (fz(x + e) - fz(x - e)) / (2 * h)
            return out

        return cls(n, F0, grad, hess, fz, jac_f, name="numeric")

    def field(self, x, W) -> np.ndarray:
        """``F(x) = F0(x) + sum_i f_i(x) W_i``."""
        return self.F0(x) + np.sum(self.f(x) * W, axis=-1)

    def field_grad(self, x, W) -> np.ndarray:
        return self.grad(x) + np.einsum("...i,...ij->...j", W, self.jac_f(x))

    def field_hess(self, x, W) -> np.ndarray:
        H = np.asarray(self.hess(x))
        if self.hess_f is not None:
            H = H + np.einsum("...i,...ijk->...jk", W, self.hess_f(x))
        return H

    def check_derivatives(self, x, h: float = 1e-5) -> float:
        """Largest gap between analytic and central-difference gradients at ``x``."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        g, J = self.grad(x), self.jac_f(x)
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = h
            fd = (self.F0(x + e) - self.F0(x - e)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(fd - g[..., i]))))
            fdf = (self.f(x + e) - self.f(x - e)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(fdf - J[..., :, i]))))
        return worst


@dataclass(frozen=True)
class EnsembleConfig:
    """Monte Carlo settings.

    ``cross_corr[j, i]`` is the correlation between ``dWt_j`` and ``dW_i``;
    ``None`` means independent noises.
    """

    paths: int
    dt: float
    T: float = 1.0
    seed: int = 0
    bridge: bool = False
    workers: int = 1
    cross_corr: Optional[tuple] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")
        if int(self.paths) != self.paths or self.paths < 1:
            raise ValueError(f"paths must be a positive integer, got {self.paths!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if abs(self.T / self.dt - round(self.T / self.dt)) > 1e-9 * self.T / self.dt:
            raise ValueError(f"horizon T={self.T} is not a whole number of steps dt={self.dt}")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


def path_generator(seed: int, path: int) -> np.random.Generator:
    """Counter-based stream for one path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(path,))))


def _noise_factor(n: int, cross_corr) -> np.ndarray:
    """Cholesky factor of the joint covariance of ``(dWt, dW)``."""
    C = np.eye(2 * n)
    if cross_corr is not None:
        X = np.asarray(cross_corr, dtype=float).reshape(n, n)
        C[:n, n:] = X
        C[n:, :n] = X.T
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise ValueError("noise correlation matrix is not positive definite") from None


def _map_blocks(fn, P: int, workers: int, block: int = BLOCK) -> list:
    spans = [(s, min(s + block, P)) for s in range(0, P, block)]
    if workers == 1 or len(spans) == 1:
        return [fn(s, e) for s, e in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda se: fn(*se), spans))


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Lazily generated Euler-Maruyama ensemble.

    ``block(start, stop)`` returns the arrays for a range of paths;
    ``paths`` stacks everything as ``(P, steps+1, dim)`` with columns
    ``U_1..U_n, F, W_1..W_n, Wt_1..Wt_n``.
    """

    assets: AssetSpec
    payoff: PayoffSpec
    config: EnsembleConfig

    @property
    def dt(self) -> float:
        return self.config.dt

    @property
    def T(self) -> float:
        return self.config.T

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def bridge(self) -> bool:
        return self.config.bridge

    @property
    def P(self) -> int:
        return self.config.paths

    def times(self) -> np.ndarray:
        K = self.config.steps
        return self.T * (np.arange(K + 1) / K)

    def _brownian(self, start: int, stop: int):
        n, K, dt = self.assets.n, self.config.steps, self.dt
        L = _noise_factor(n, self.config.cross_corr)
        z = np.stack([path_generator(self.seed, p).standard_normal((K, 2 * n)) for p in range(start, stop)])
        z = z @ L.T * math.sqrt(dt)
        B = np.zeros((stop - start, K + 1, 2 * n))
        np.cumsum(z, axis=1, out=B[:, 1:])
        if self.bridge:
            frac = (np.arange(K + 1) / K)[None, :, None]
            B = B - frac * B[:, -1:, :]
            B[:, -1] = 0.0
        return B[..., :n], B[..., n:]

    def block(self, start: int, stop: int) -> dict:
        Wt, W = self._brownian(start, stop)
        a = self.assets
        t = self.times()
        if np.any(a.kappa):
            dWt = np.diff(Wt, axis=1)
            U = np.empty_like(Wt)
            U[:, 0] = a.u0
            for k in range(self.config.steps):
                U[:, k + 1] = U[:, k] + a.drift_at(U[:, k]) * self.dt + a.vol * dWt[:, k]
        else:
            # constant coefficients: the Euler sum in closed form
            U = a.u0 + a.drift * t[None, :, None] + a.vol * Wt
        F = self.payoff.field(U, W)
        return {"U": U, "F": F, "W": W, "Wt": Wt}

    def iter_blocks(self, block: int = BLOCK) -> Iterator[dict]:
        for s in range(0, self.P, block):
            yield self.block(s, min(s + block, self.P))

    def map_paths(self, fn: Callable[[dict], np.ndarray]) -> np.ndarray:
        """Apply ``fn`` to every block and concatenate per-path results in path order."""
        parts = _map_blocks(lambda s, e: fn(self.block(s, e)), self.P, self.config.workers)
        return np.concatenate(parts)

    @property
    def paths(self) -> np.ndarray:
        def stack(b):
            return np.concatenate([b["U"], b["F"][..., None], b["W"], b["Wt"]], axis=-1)

        return self.map_paths(stack)

    def path(self, i: int) -> dict:
        b = self.block(i, i + 1)
        return {k: v[0] for k, v in b.items()}

    def to_csv(self, max_paths: int | None = None) -> str:
        n = self.assets.n
        header = ["path", "step", "t"] + [f"U_{i+1}" for i in range(n)] + ["F"]
        header += [f"W_{i+1}" for i in range(n)] + [f"Wt_{i+1}" for i in range(n)]
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        t = self.times()
        P = self.P if max_paths is None else min(self.P, max_paths)
        arr = self.paths[:P]
        for p in range(P):
            for k in range(arr.shape[1]):
                w.writerow([p, k, repr(float(t[k]))] + [repr(float(v)) for v in arr[p, k]])
        return out.getvalue()


def simulate(assets: AssetSpec, payoff: PayoffSpec, cfg: EnsembleConfig) -> PathEnsemble:
    """Validate the configuration and return the (lazily evaluated) ensemble."""
    if payoff.n != assets.n:
        raise ValueError(f"payoff dimension {payoff.n} does not match {assets.n} assets")
    rate = max(np.max(np.abs(assets.drift)), np.max(np.abs(assets.kappa)))
    if cfg.dt * rate > 1:
        raise ValueError(f"unstable configuration: dt * max|a| = {cfg.dt * rate:g} > 1")
    _noise_factor(assets.n, cfg.cross_corr)
    return PathEnsemble(assets, payoff, cfg)


# -- Ito-Kunita-Wentzell decomposition -------------------------------------

IKW_TERMS = ("drift", "diffusion", "ito", "cross", "noise")


def ikw_terms(assets: AssetSpec, payoff: PayoffSpec, path: dict, dt: float, wt_corr=None) -> dict:
    """Per-step contributions to ``dF(U)`` for one path or a block of paths.

    ``path`` holds ``U``, ``W`` and ``Wt`` arrays with the step axis second to
    last.  Returns the five terms, their total, the sampled increment
    ``F(U_{k+1}) - F(U_k)`` and the difference.
    """
    U, W, Wt = path["U"], path["W"], path["Wt"]
    Uk, Wk = U[..., :-1, :], W[..., :-1, :]
    dU, dW, dWt = np.diff(U, axis=-2), np.diff(W, axis=-2), np.diff(Wt, axis=-2)
    b = assets.vol
    R = np.eye(assets.n) if wt_corr is None else np.asarray(wt_corr, dtype=float)
    B = np.outer(b, b) * R
    g = payoff.field_grad(Uk, Wk)
    hF = payoff.field_hess(Uk, Wk)
    J = payoff.jac_f(Uk)
    terms = {
        "drift": np.sum(assets.drift_at(Uk) * g, axis=-1) * dt,
        "diffusion": np.sum(b * g * dWt, axis=-1),
        "ito": 0.5 * np.einsum("...ij,ij->...", hF, B) * dt,
        # realized cross-variation d f_i/d x_j dU_j dW_i
        "cross": np.einsum("...ij,...j,...i->...", J, dU, dW),
        "noise": np.sum(payoff.f(Uk) * dW, axis=-1),
    }
    total = sum(terms[k] for k in IKW_TERMS)
    F = payoff.field(U, W)
    increment = np.diff(F, axis=-1)
    return {**terms, "total": total, "increment": increment, "defect": total - increment}


def telescoping_rms(ens: PathEnsemble, wt_corr=None) -> float:
    """RMS over paths of ``sum_k (five terms) - (F(T) - F(0))``."""

    def per_path(b):
        r = ikw_terms(ens.assets, ens.payoff, b, ens.dt, wt_corr)
        return np.sum(r["total"], axis=-1) - (b["F"][:, -1] - b["F"][:, 0])

    d = ens.map_paths(per_path)
    return float(math.sqrt(np.sum(d * d) / d.size))


# -- estimates --------------------------------------------------------------


@dataclass(frozen=True)
class EstimateReport:
    estimate: float
    stderr: float
    paths: int
    dt: float
    seed: int
    extras: dict = field(default_factory=dict)

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.estimate - target) <= k * self.stderr

    def to_dict(self) -> dict:
        from .reports import jsonable

        return {
            "estimate": float(self.estimate),
            "stderr": float(self.stderr),
            "paths": int(self.paths),
            "dt": float(self.dt),
            "seed": int(self.seed),
            "extras": jsonable(self.extras),
        }


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    x = np.ascontiguousarray(x, dtype=float)
    P = x.size
    mean = float(np.sum(x) / P)
    if P < 2:
        return mean, 0.0
    var = float(np.sum((x - mean) ** 2) / (P - 1))
    return mean, math.sqrt(var / P)


def sine_trial(T: float) -> Callable:
    """``V(t, U) = sin(pi t / T)``, vanishing at both ends."""
    return lambda t, U: np.broadcast_to(np.sin(np.pi * t / T), U.shape[:-1])


def weak_residual(trial: Callable, assets: AssetSpec, payoff: PayoffSpec, ens: PathEnsemble) -> EstimateReport:
    """Monte Carlo estimate of ``int V dF(U)`` over a bridge ensemble.

    ``trial(t, U)`` gives the weight ``V`` at each step (shape ``U.shape[:-1]``).
    The integral is split into the drift group
    ``V (a.grad F + B:hess F / 2 + cross) dt``, the diffusion group
    ``V b.grad F dWt`` and the noise group ``V f.dW``; their means are
    reported in ``extras`` together with the boundary term
    ``f (W(T) - W(0))``, which vanishes for bridges.
    """
    if not ens.bridge:
        raise ValueError("weak residual needs a Brownian-bridge ensemble")
    t = ens.times()[:-1]

    def per_path(b):
        r = ikw_terms(assets, payoff, b, ens.dt)
        V = np.asarray(trial(t, b["U"][:, :-1, :]))
        groups = (r["drift"] + r["ito"] + r["cross"], r["diffusion"], r["noise"])
        vals = [np.sum(V * g, axis=-1) for g in groups]
        endpoint = np.sum(payoff.f(b["U"][:, 0, :]) * (b["W"][:, -1] - b["W"][:, 0]), axis=-1)
        return np.stack(vals + [endpoint], axis=-1)

    rows = ens.map_paths(per_path)
    total = rows[:, 0] + rows[:, 1] + rows[:, 2]
    est, se = _mean_stderr(total)
    names = ("drift", "diffusion", "noise", "boundary")
    extras = {name: _mean_stderr(rows[:, i])[0] for i, name in enumerate(names)}
    return EstimateReport(est, se, ens.P, ens.dt, ens.seed, extras)


def probability_current_A(assets: AssetSpec, payoff: PayoffSpec, state, W=None) -> dict:
    """``j_i = b_i (grad F)_i + f_i`` and the ``grad b . grad f`` diagnostic.

    Volatilities are constant, so their gradient vanishes and the
    orthogonality diagnostic is identically zero.
    """
    x = _vec(state, assets.n, "state")
    W = np.zeros(assets.n) if W is None else _vec(W, assets.n, "W")
    g = payoff.field_grad(x, W)
    j = assets.vol * g + payoff.f(x)
    grad_b = np.zeros((assets.n, assets.n))
    ortho = float(np.einsum("ij,ij->", grad_b, payoff.jac_f(x)))
    return {"current": j, "orthogonality": ortho}


def generator_canonical(sigma: float, lam: complex = 0.0, c: float = 0.0) -> NormalPoly:
    """``sigma^2/2 a+ a + lam a + conj(lam) a+ + c``."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma!r}")
    lam = complex(lam)
    return NormalPoly({(1, 1): 0.5 * sigma * sigma, (0, 1): lam, (1, 0): lam.conjugate(), (0, 0): c})


def symmetric_number_defect(N: int) -> float:
    """Largest gap between ``a+ a + a a+`` and ``diag(2n + 1)`` on ``n <= N-3``."""
    from .fock import materialize

    a, ad = NormalPoly.a(), NormalPoly.adag()
    M = materialize(ad * a + a * ad, N).entries[: N - 2, : N - 2]
    return float(np.max(np.abs(M - np.diag(2.0 * np.arange(N - 2) + 1))))


# -- market-making model ----------------------------------------------------


@dataclass(frozen=True)
class CWModel:
    """Mean-reverting abnormal returns ``d alpha = -rho alpha dt + sigma dM + nu dW``."""

    rho_mr: float
    sigma: float
    nu: float
    n: int = 1

    def __post_init__(self):
        if not self.rho_mr > 0:
            raise ValueError(f"mean-reversion rate must be positive, got {self.rho_mr!r}")
        if self.sigma < 0 or self.nu < 0:
            raise ValueError("sigma and nu must be non-negative")
        if self.n < 1:
            raise ValueError("dimension must be >= 1")


def _exact(x: float) -> Fraction:
    # decimal reading of the parameter, so 0.2**2 + 0.05**2 is exactly 0.0425
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class CWCoefficients:
    drift: Fraction
    diffusion: Fraction
    noise: Fraction
    trace_B_over_n: Fraction

    def to_dict(self) -> dict:
        return {
            "drift": float(self.drift),
            "diffusion": float(self.diffusion),
            "noise": float(self.noise),
            "trace_B_over_n": float(self.trace_B_over_n),
            "exact": {k: str(getattr(self, k)) for k in ("drift", "diffusion", "noise", "trace_B_over_n")},
        }

    def apply(self, testfn: "TestFunction", alpha) -> float:
        """Generator ``drift alpha.grad f + diffusion lap f`` at ``alpha``."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        return float(float(self.drift) * alpha @ testfn.grad(alpha) + float(self.diffusion) * testfn.laplacian(alpha))


def cw_generator(model: CWModel) -> CWCoefficients:
    """Generator coefficients after substituting ``F -> f``, ``f_i -> nu``,
    ``A -> -rho`` and identifying both noises, in exact arithmetic."""
    s2 = _exact(model.sigma) ** 2
    v2 = _exact(model.nu) ** 2
    return CWCoefficients(
        drift=-_exact(model.rho_mr),
        diffusion=(s2 + v2) / 2,
        noise=_exact(model.nu),
        trace_B_over_n=s2 + v2,
    )


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Smooth test function with gradient and Laplacian, vectorized over ``(..., n)``."""

    __test__ = False  # not a pytest class

    f: Callable
    grad: Callable
    laplacian: Callable
    name: str = "custom"

    @classmethod
    def square(cls) -> "TestFunction":
        return cls(
            lambda x: np.sum(x * x, axis=-1),
            lambda x: 2 * x,
            lambda x: 2.0 * np.shape(x)[-1] * np.ones(np.shape(x)[:-1]),
            "square",
        )

    @classmethod
    def linear(cls) -> "TestFunction":
        return cls(lambda x: np.sum(x, axis=-1), np.ones_like, lambda x: np.zeros(np.shape(x)[:-1]), "linear")

    @classmethod
    def constant(cls, c: float = 1.0) -> "TestFunction":
        return cls(
            lambda x: np.full(np.shape(x)[:-1], float(c)),
            np.zeros_like,
            lambda x: np.zeros(np.shape(x)[:-1]),
            "constant",
        )


@dataclass(frozen=True)
class MCConfig:
    paths: int = 100_000
    dt: float = 1e-3
    steps: int = 5
    seed: int = 0
    workers: int = 1


def cw_validate(model: CWModel, testfn: TestFunction, alpha0, mc: MCConfig = MCConfig()) -> EstimateReport:
    """Estimate ``(E f(alpha_h) - f(alpha_0)) / h`` with ``h = steps * dt`` and compare with the generator."""
    if mc.dt > 1e-3 / model.rho_mr:
        raise ValueError(f"step too coarse: dt={mc.dt:g} > 1e-3/rho = {1e-3 / model.rho_mr:g}")
    if mc.steps < 1:
        raise ValueError("steps must be >= 1")
    n = model.n
    a0 = _vec(alpha0, n, "alpha0")
    h = mc.steps * mc.dt
    f0 = float(testfn.f(a0))

    def chunk(start, stop):
        z = np.stack([path_generator(mc.seed, p).standard_normal((mc.steps, 2 * n)) for p in range(start, stop)])
        z *= math.sqrt(mc.dt)
        alpha = np.broadcast_to(a0, (stop - start, n)).copy()
        for k in range(mc.steps):
            alpha = alpha - model.rho_mr * alpha * mc.dt + model.sigma * z[:, k, :n] + model.nu * z[:, k, n:]
        return (testfn.f(alpha) - f0) / h

    parts = _map_blocks(chunk, mc.paths, mc.workers)
    est, se = _mean_stderr(np.concatenate(parts))
    target = cw_generator(model).apply(testfn, a0)
    return EstimateReport(est, se, mc.paths, mc.dt, mc.seed, {"generator": target, "horizon": h, "z": (est - target) / se if se else 0.0})
