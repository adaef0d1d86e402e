"""Named self-check suites used by ``deltacalc verify``.

Each suite returns a list of :class:`Check` results.  Suites are
deterministic: every random draw comes from a fixed seed.
"""

from __future__ import annotations

import itertools
import math
import time
from fractions import Fraction
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dynamics as dyn
from . import finance as fin
from . import liouville as lv
from .expr import A, ADAG
from .fock import (
    expectation,
    gibbs_state,
    gns_inner,
    materialize,
    max_norm,
)
from .opalg import (
    NormalPoly,
    Var,
    commutator,
    delta_deriv,
    delta_integral,
    normal_order,
)
from .randoms import random_density, random_hermitian, random_word
from .reports import stable


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _check(name: str, passed: bool, **values) -> Check:
    detail = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in values.items())
    return Check(name, bool(passed), detail)


# -- symbolic ---------------------------------------------------------------


def oracle(trials: int = 1000, N: int = 64, max_len: int = 8, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    k = N - max_len
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(trials):
        w = random_word(rng, max_len)
        diff = materialize(w, N).entries - materialize(normal_order(w), N).entries
        worst = max(worst, max_norm(diff, k))
    elapsed = time.perf_counter() - t0
    return [
        _check("word/normal-order agreement", worst <= 1e-9, worst=worst, trials=trials),
        _check("oracle runtime", elapsed <= 60, seconds=elapsed),
    ]


def commutation() -> list[Check]:
    out = [_check("[a, a+] = 1", commutator(NormalPoly.a(), NormalPoly.adag()) == NormalPoly.constant(1.0))]
    for q in (0.5, 1.0, 2.0):
        lhs = normal_order(A * ADAG, q) - q * normal_order(ADAG * A, q)
        out.append(_check(f"a a+ - q a+ a = 1 (q={q})", lhs == NormalPoly.constant(1.0, q)))
    return out


def delta_inverse(max_power: int = 10) -> list[Check]:
    out = []
    for wrt in (Var.A, Var.ADAG):
        bad = 0
        for m, n in itertools.product(range(max_power + 1), repeat=2):
            p = NormalPoly.monomial(m, n)
            if delta_deriv(delta_integral(p, wrt), wrt) != p:
                bad += 1
        out.append(_check(f"d/d{wrt.value} after integral is identity", bad == 0, failures=bad))
    return out


def unit_integral() -> list[Check]:
    a, ad = NormalPoly.a(), NormalPoly.adag()
    val = delta_integral(a, Var.ADAG) - delta_integral(ad, Var.A)
    return [_check("int a da+ - int a+ da = 1", val == NormalPoly.constant(1.0), value=str(val))]


def hermitian_basis(max_degree: int = 4) -> list[tuple[str, NormalPoly]]:
    """Hermitian monomial basis: ``x + x+`` and ``i(x - x+)`` for each monomial."""
    basis = []
    for m in range(max_degree + 1):
        for n in range(max_degree + 1 - m):
            x = NormalPoly.monomial(m, n)
            if m == n:
                basis.append((f"M{m}{n}", x))
            elif m > n:
                basis.append((f"M{m}{n}+h.c.", x + x.dagger()))
                basis.append((f"iM{m}{n}-h.c.", 1j * (x - x.dagger())))
    return basis


def hamilton() -> list[Check]:
    a, ad = NormalPoly.a(), NormalPoly.adag()
    bad = []
    for name, H in hermitian_basis(4):
        da, dad = dyn.hamilton_rhs(H)
        if da != dyn.heisenberg_rhs(H, a) or dad != dyn.heisenberg_rhs(H, ad):
            bad.append(name)
    return [_check("hamilton_rhs equals heisenberg_rhs on degree <= 4", not bad, mismatches=len(bad))]


# -- numeric ----------------------------------------------------------------


def energy(samples: int = 50, N: int = 32, seed: int = 1) -> list[Check]:
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 10.0, 21)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(samples):
        H = random_hermitian(rng, 4, scale=0.1)
        phi = rng.normal(size=N) + 1j * rng.normal(size=N)
        phi /= np.linalg.norm(phi)
        _, dev = dyn.energy_series(H, phi, times, N)
        worst = max(worst, dev)
    elapsed = time.perf_counter() - t0
    return [
        _check("energy conserved", worst <= 1e-9, worst=worst),
        _check("energy runtime", elapsed <= 120, seconds=elapsed),
    ]


def ou(N: int = 32, seed: int = 2) -> list[Check]:
    rng = np.random.default_rng(seed)
    c = rng.normal(size=N) + 1j * rng.normal(size=N)
    omega, tau = 1.3, 0.7
    H0 = dyn.HamiltonianSpec.free(omega)
    via_matrix = dyn.evolve_state(H0, c, tau, dyn.EvolutionMode.EUCLIDEAN)
    err = float(np.max(np.abs(dyn.ou_evolve(c, omega, tau) - via_matrix)))
    t1, t2 = 0.25, 0.5  # dyadic times keep the exponents exact
    comp = dyn.ou_evolve(dyn.ou_evolve(c, omega, t1), omega, t2)
    direct = dyn.ou_evolve(c, omega, t1 + t2)
    comp_err = float(np.max(np.abs(comp - direct)))
    return [
        _check("OU flow matches exp(-tau H0)", err <= 1e-12, err=err),
        _check("OU composition law", comp_err <= 1e-12, err=comp_err),
    ]


def gibbs() -> list[Check]:
    N, beta, omega = 40, 1.0, 1.0
    g = gibbs_state(materialize(dyn.HamiltonianSpec.free(omega).poly, N), beta)
    Z_closed = math.exp(-beta * omega / 2) / (1 - math.exp(-beta * omega))
    n_closed = 1 / math.expm1(beta * omega)
    nbar = expectation(materialize(NormalPoly.number(), N), g.rho).real
    return [
        _check("Z matches geometric series", abs(g.Z - Z_closed) <= 1e-6, Z=g.Z, closed=Z_closed),
        _check("<a+a> matches Bose occupation", abs(nbar - n_closed) <= 1e-6, n=nbar, closed=n_closed),
        _check("trace(rho) = 1", abs(np.trace(g.rho.entries) - 1) <= 1e-12),
    ]


def gns(pairs: int = 200, N: int = 16, seed: int = 3) -> list[Check]:
    rng = np.random.default_rng(seed)
    g = gibbs_state(materialize(dyn.HamiltonianSpec.free(1.0).poly, N), 1.0)
    min_aa, worst_cs = np.inf, -np.inf
    for _ in range(pairs):
        X = rng.normal(size=(2, N, N)) + 1j * rng.normal(size=(2, N, N))
        aa = gns_inner(X[0], X[0], g).real
        bb = gns_inner(X[1], X[1], g).real
        ab = gns_inner(X[0], X[1], g)
        min_aa = min(min_aa, aa, bb)
        worst_cs = max(worst_cs, abs(ab) ** 2 - aa * bb * (1 + 1e-10))
    return [
        _check("<A,A> >= 0", min_aa >= -1e-12, min=float(min_aa)),
        _check("Cauchy-Schwarz", worst_cs <= 0, excess=float(worst_cs)),
    ]


def liouvillian(instances: int = 100, N: int = 16, seed: int = 4) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        H = materialize(random_hermitian(rng, 2, scale=0.3), N)
        rho = random_density(rng, N)
        th = lv.build_liouvillian(H)
        worst = max(worst, max_norm(1j * th.apply(rho) - 1j * (H.entries @ rho - rho @ H.entries)))
    out = [_check("i theta rho = i[H, rho]", worst <= 1e-12, worst=worst)]
    slopes = series_slopes(N)
    for k, s in slopes.items():
        out.append(_check(f"series order {k} slope", abs(s - (k + 1)) <= 0.2, slope=s))
    return out


def series_slopes(N: int = 16, seed: int = 5) -> dict[int, float]:
    rng = np.random.default_rng(seed)
    H = materialize(NormalPoly({(1, 1): 0.1, (1, 0): 0.1, (0, 1): 0.1}), N)
    rho = random_density(rng, N)
    th = lv.build_liouvillian(H)
    ts = np.array([1e-1, 1e-2, 1e-3])
    out = {}
    for k in (1, 2, 3):
        errs = [max_norm(lv.series_evolve(th, rho, t, k).entries - lv.exact_conjugation(H, rho, t)) for t in ts]
        out[k] = float(np.polyfit(np.log(ts), np.log(errs), 1)[0])
    return out


def semigroup(pairs: int = 10, N: int = 24, seed: int = 6) -> list[Check]:
    rng = np.random.default_rng(seed)
    H = dyn.HamiltonianSpec.free(1.0).poly + random_hermitian(rng, 2, scale=0.05)
    worst = 0.0
    for _ in range(pairs):
        T = rng.uniform(0.1, 3.0)
        t = rng.uniform(0.0, T)
        worst = max(worst, dyn.semigroup_check(H, t, T, N))
    return [_check("P^T = P^t P^(T-t)", worst <= 1e-10, worst=worst)]


def gauss() -> list[Check]:
    n = NormalPoly.number()
    r = lv.gauss_boundary_check(n, range(13), L=8.0, nodes=2048)
    r2 = lv.gauss_boundary_check(n, range(13), L=8.0, nodes=4096)
    drift = abs(r.residual_norm - r2.residual_norm)
    return [
        _check("boundary currents vanish at L=8", r.terms["boundary_current"] <= 1e-10, max=r.terms["boundary_current"]),
        _check("Gauss report stable under node doubling", drift <= 1e-8, drift=drift),
    ]


def symmetric_number() -> list[Check]:
    d = fin.symmetric_number_defect(16)
    return [_check("a+a + a a+ = diag(2n+1)", d == 0.0, defect=d)]


def weak_residual(counts=(1_000, 10_000, 100_000), seed: int = 7, workers: int = 1) -> list[Check]:
    assets = fin.AssetSpec([0.0], [1.0], [0.0])
    payoff = fin.PayoffSpec.linear([1.0])
    trial = fin.sine_trial(1.0)
    reports = []
    for P in counts:
        ens = fin.simulate(assets, payoff, fin.EnsembleConfig(P, 0.01, 1.0, seed=seed, bridge=True, workers=workers))
        reports.append(fin.weak_residual(trial, assets, payoff, ens))
    last = reports[-1]
    slope = float(np.polyfit(np.log(counts), np.log([r.stderr for r in reports]), 1)[0])
    return [
        _check("harmonic weak residual ~ 0", last.within(0.0), estimate=last.estimate, stderr=last.stderr),
        _check("stderr slope", abs(slope + 0.5) <= 0.1, slope=slope),
    ]


def cw(paths: int = 100_000, seed: int = 0, workers: int = 1) -> list[Check]:
    model = fin.CWModel(1.0, 0.2, 0.05)
    c = fin.cw_generator(model)
    exact = c.drift == -1 and c.diffusion == Fraction(17, 800) and c.noise == Fraction(1, 20)
    r = fin.cw_validate(model, fin.TestFunction.square(), 0.5, fin.MCConfig(paths, 1e-3, seed=seed, workers=workers))
    return [
        _check("generator coefficients exact", exact and float(c.diffusion) == 0.02125, diffusion=float(c.diffusion)),
        _check("MC generator estimate", r.within(-0.4575), estimate=r.estimate, stderr=r.stderr),
    ]


def diagnostics() -> list[Check]:
    n = NormalPoly.number()
    out = []
    el16, el32 = dyn.euler_lagrange_residual(n, 16), dyn.euler_lagrange_residual(n, 32)
    hj16, hj32 = dyn.hj_residual(1.0, 0.0, 16), dyn.hj_residual(1.0, 0.0, 32)
    k = hj16.exact_upto
    out.append(_check("euler-lagrange finite and stable", el16.is_finite() and stable(el16.residual_norm, el32.norm_upto(el16.exact_upto))))
    out.append(_check("hamilton-jacobi finite and stable", hj16.is_finite() and stable(hj16.norm_upto(k), hj32.norm_upto(k)), r16=hj16.norm_upto(k), r32=hj32.norm_upto(k)))
    g16 = gibbs_state(materialize(n, 16), 1.0).rho
    g32 = gibbs_state(materialize(n, 32), 1.0).rho
    c16, c32 = lv.continuity_residual(n, g16), lv.continuity_residual(n, g32)
    kc = c16.exact_upto
    out.append(_check("continuity finite and stable", c16.is_finite() and stable(c16.norm_upto(kc), c32.norm_upto(kc)), r16=c16.norm_upto(kc), r32=c32.norm_upto(kc)))
    co = dyn.clark_ocone_residual(n, 0.0)
    expected = NormalPoly({(1, 1): -1.0, (0, 0): -1.0})
    e16 = dyn.clark_ocone_residual(n, 0.0, np.eye(16)[1]).expectation
    e32 = dyn.clark_ocone_residual(n, 0.0, np.eye(32)[1]).expectation
    out.append(_check("clark-ocone residual is -a+a - 1", co.residual == expected and stable(abs(e16), abs(e32)), residual=str(co.residual)))
    return out


def determinism(seed: int = 11) -> list[Check]:
    assets = fin.AssetSpec([0.1], [0.5], [1.0])
    payoff = fin.PayoffSpec.quadratic(Q=[[2.0]], f0=[0.3])
    arrays = []
    for w in (1, 3):
        ens = fin.simulate(assets, payoff, fin.EnsembleConfig(5000, 0.02, 1.0, seed=seed, workers=w))
        arrays.append(ens.paths)
    same = np.array_equal(arrays[0], arrays[1])
    m = fin.CWModel(1.0, 0.2, 0.05)
    r1 = fin.cw_validate(m, fin.TestFunction.square(), 0.5, fin.MCConfig(5000, 1e-3, seed=seed, workers=1))
    r4 = fin.cw_validate(m, fin.TestFunction.square(), 0.5, fin.MCConfig(5000, 1e-3, seed=seed, workers=4))
    return [_check("same seed, any worker count, same output", same and r1 == r4)]


SUITES: dict[str, Callable[[], list[Check]]] = {
    "oracle": oracle,
    "commutation": commutation,
    "delta-inverse": delta_inverse,
    "unit-integral": unit_integral,
    "hamilton": hamilton,
    "energy": energy,
    "ou": ou,
    "gibbs": gibbs,
    "gns": gns,
    "liouvillian": liouvillian,
    "semigroup": semigroup,
    "gauss": gauss,
    "symmetric-number": symmetric_number,
    "weak-residual": weak_residual,
    "cw": cw,
    "diagnostics": diagnostics,
    "determinism": determinism,
}


def run(name: str) -> list[Check]:
    if name == "all":
        return [c for fn in SUITES.values() for c in fn()]
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}") from None
    return fn()
