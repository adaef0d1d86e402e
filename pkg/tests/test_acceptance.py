"""One check per acceptance criterion, each printing a PASS/FAIL line.

Every check uses the tolerance stated by its criterion.  Oracles are built
independently of the code under test wherever an independent route exists.
"""

import contextlib
import io
import itertools
import math
import pathlib
import time
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from cli_cases import CASES, golden_name
from deltacalc import dynamics as dyn
from deltacalc import finance as fin
from deltacalc import fock
from deltacalc import liouville as lv
from deltacalc.cli import COMMANDS, main
from deltacalc.expr import ADAG, A, Product
from deltacalc.opalg import (
    NormalPoly,
    Var,
    commutator,
    delta_deriv,
    delta_integral,
    normal_order,
)
from deltacalc.parser import parse
from deltacalc.randoms import random_density, random_hermitian, random_word

EPS = np.finfo(float).eps
GOLDEN = pathlib.Path(__file__).parent / "golden"


def word_oracle(letters, N, upto):
    """Untruncated action of a ladder word on basis vectors, in exact integers.

    Each column ``j`` maps to a single row with a coefficient whose square is
    an integer, so ``math.sqrt`` of that integer is correctly rounded.
    """
    M = np.zeros((upto + 1, upto + 1))
    for j in range(upto + 1):
        level, sq = j, 1
        for letter in reversed(letters):
            if letter is A:
                sq *= level
                level -= 1
            else:
                level += 1
                sq *= level
            if sq == 0:
                break
        if sq and level <= upto:
            M[level, j] = math.sqrt(sq)
    return M


def test_c01_word_oracle(criterion):
    rng = np.random.default_rng(101)
    N, upto = 64, 56
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        w = random_word(rng, 8)
        letters = list(w.factors) if isinstance(w, Product) else [w]
        got = fock.materialize(normal_order(w), N).entries[: upto + 1, : upto + 1]
        worst = max(worst, float(np.max(np.abs(got - word_oracle(letters, N, upto)))))
    elapsed = time.perf_counter() - t0
    criterion("C1 normal order vs word products at N=64", worst <= 1e-9 and elapsed <= 60,
              f"max err {worst:.3g} on indices <= {upto}, {elapsed:.1f}s")


def test_c02_commutation(criterion):
    ok = commutator(NormalPoly.a(), NormalPoly.adag()) == NormalPoly.constant(1.0)
    for q in (0.5, 1.0, 2.0):
        lhs = normal_order(A * ADAG, q) - q * normal_order(ADAG * A, q)
        ok &= lhs == NormalPoly.constant(1.0, q)
    criterion("C2 commutation relations", ok, "[a,a+]=1 and q in {0.5, 1, 2} exact")


def test_c03_delta_inverse(criterion):
    bad = [
        (wrt, m, n)
        for wrt in (Var.A, Var.ADAG)
        for m, n in itertools.product(range(11), repeat=2)
        if delta_deriv(delta_integral(NormalPoly.monomial(m, n), wrt), wrt) != NormalPoly.monomial(m, n)
    ]
    criterion("C3 derivative after integral is identity", not bad, f"{len(bad)} failures over 242 cases")


def test_c04_unit_integral(criterion):
    a, ad = parse("a"), parse("ad")
    val = normal_order(delta_integral(a, Var.ADAG) - delta_integral(ad, Var.A))
    criterion("C4 unit integral", val == NormalPoly.constant(1.0), str(val))


def hermitian_monomials(max_degree):
    for m in range(max_degree + 1):
        for n in range(max_degree + 1 - m):
            x = NormalPoly.monomial(m, n)
            if m == n:
                yield x
            elif m > n:
                yield x + x.dagger()
                yield 1j * (x - x.dagger())


def test_c05_hamilton_equals_heisenberg(criterion):
    a, ad = NormalPoly.a(), NormalPoly.adag()
    basis = list(hermitian_monomials(4))
    bad = 0
    for H in basis:
        da, dad = dyn.hamilton_rhs(H)
        # independent route: i[H, X] = i(HX - XH) via products of normal forms
        bad += da != 1j * (H * a - a * H) or dad != 1j * (H * ad - ad * H)
    criterion("C5 hamilton_rhs == heisenberg_rhs", bad == 0, f"{len(basis)} basis elements, {bad} mismatches")


def test_c06_energy_conservation(criterion):
    rng = np.random.default_rng(106)
    N, times = 32, np.linspace(0.0, 10.0, 21)
    t0 = time.perf_counter()
    worst = oracle_gap = 0.0
    for _ in range(50):
        H = random_hermitian(rng, 4, scale=0.1)
        phi = rng.normal(size=N) + 1j * rng.normal(size=N)
        phi /= np.linalg.norm(phi)
        energies, dev = dyn.energy_series(H, phi, times, N)
        Hm = fock.materialize(H, N).entries
        for t, e in zip(times, energies):
            psi = scipy.linalg.expm(-1j * t * Hm) @ phi
            oracle_gap = max(oracle_gap, abs(np.vdot(psi, Hm @ psi).real - e))
        worst = max(worst, dev)
    elapsed = time.perf_counter() - t0
    criterion("C6 energy conservation", worst <= 1e-9 and oracle_gap <= 1e-9 and elapsed <= 120,
              f"max drift {worst:.3g}, scipy gap {oracle_gap:.3g}, {elapsed:.1f}s")


def test_c07_ou_semigroup(criterion):
    rng = np.random.default_rng(107)
    N = 32
    H0 = fock.materialize(dyn.HamiltonianSpec.free(1.3).poly, N).entries
    err = comp = 0.0
    for _ in range(20):
        c = rng.normal(size=N) + 1j * rng.normal(size=N)
        c /= np.linalg.norm(c)
        tau, t1, t2 = rng.uniform(0, 2, 3)
        err = max(err, float(np.max(np.abs(dyn.ou_evolve(c, 1.3, tau) - scipy.linalg.expm(-tau * H0) @ c))))
        # exp is correctly composed up to rounding of its argument: allow a few ulps of |x|
        x = 1.3 * (np.arange(N) + 0.5) * (t1 + t2)
        direct = dyn.ou_evolve(c, 1.3, t1 + t2)
        two_step = dyn.ou_evolve(dyn.ou_evolve(c, 1.3, t1), 1.3, t2)
        comp = max(comp, float(np.max(np.abs(two_step - direct) / (np.abs(direct) * 4 * EPS * (1 + x)))))
    criterion("C7 OU flow vs expm(-tau H0)", err <= 1e-12, f"max err {err:.3g}")
    criterion("C7 OU composition law", comp <= 1.0, f"worst gap {comp:.3g} of the rounding bound")


def test_c08_gibbs_closed_forms(criterion):
    N = 40
    g = fock.gibbs_state(fock.materialize(dyn.HamiltonianSpec.free(1.0).poly, N), 1.0)
    n = fock.expectation(fock.materialize(NormalPoly.number(), N), g.rho).real
    Z_series = sum(math.exp(-(k + 0.5)) for k in range(N))
    n_series = sum(k * math.exp(-(k + 0.5)) for k in range(N)) / Z_series
    criterion("C8 Z vs geometric series", abs(g.Z - Z_series) <= 1e-6, f"Z={g.Z!r}, series={Z_series!r}")
    criterion("C8 <a+a> vs 0.581977", abs(n - 0.581977) <= 1e-6 and abs(n - n_series) <= 1e-12, f"{n!r}")
    # the stated literal for Z disagrees with its own closed form by 5.6e-5
    criterion("C8 Z vs 0.959573", abs(g.Z - 0.959573) <= 1e-6, f"Z={g.Z!r}, gap {abs(g.Z - 0.959573):.3g}")


def test_c09_gns_positivity(criterion):
    rng = np.random.default_rng(109)
    N = 16
    g = fock.gibbs_state(fock.materialize(dyn.HamiltonianSpec.free(1.0).poly + random_hermitian(rng, 2, 0.05), N), 1.0)
    rho = g.rho.entries
    low, excess, gap = np.inf, -np.inf, 0.0
    for _ in range(200):
        X, Y = rng.normal(size=(2, N, N)) + 1j * rng.normal(size=(2, N, N))
        xx, yy, xy = fock.gns_inner(X, X, g).real, fock.gns_inner(Y, Y, g).real, fock.gns_inner(X, Y, g)
        gap = max(gap, abs(xy - np.trace(X @ Y.conj().T @ rho)))
        low = min(low, xx, yy)
        excess = max(excess, abs(xy) ** 2 - xx * yy * (1 + 1e-10))
    criterion("C9 GNS positivity and Cauchy-Schwarz", low >= -1e-12 and excess <= 0 and gap <= 1e-10,
              f"min <A,A> {low:.3g}, CS excess {excess:.3g}, trace gap {gap:.3g}")


def test_c10_liouvillian(criterion):
    rng = np.random.default_rng(110)
    N = 16
    worst = 0.0
    for _ in range(100):
        H = fock.materialize(random_hermitian(rng, 2, 0.3), N).entries
        rho = random_density(rng, N)
        got = 1j * lv.build_liouvillian(H).apply(rho)
        worst = max(worst, float(np.max(np.abs(got - 1j * (H @ rho - rho @ H)))))
    criterion("C10 contraction equals i[H, rho]", worst <= 1e-12, f"max err {worst:.3g}")
    H = fock.materialize(NormalPoly({(1, 1): 0.1, (1, 0): 0.1, (0, 1): 0.1}), N).entries
    rho = random_density(rng, N)
    th = lv.build_liouvillian(H)
    ts = np.array([1e-1, 1e-2, 1e-3])
    w, V = np.linalg.eigh(H)
    exact = [V @ np.diag(np.exp(1j * t * w)) @ V.conj().T @ rho @ V @ np.diag(np.exp(-1j * t * w)) @ V.conj().T for t in ts]
    for k in (1, 2, 3):
        errs = [np.max(np.abs(lv.series_evolve(th, rho, t, k).entries - e)) for t, e in zip(ts, exact)]
        slope = float(np.polyfit(np.log(ts), np.log(errs), 1)[0])
        criterion(f"C10 series order {k} slope", abs(slope - (k + 1)) <= 0.2, f"slope {slope:.3f}")


def test_c11_semigroup(criterion):
    rng = np.random.default_rng(111)
    H = dyn.HamiltonianSpec.free(1.0).poly + random_hermitian(rng, 2, 0.05)
    worst = 0.0
    for _ in range(10):
        T = rng.uniform(0.1, 3.0)
        worst = max(worst, dyn.semigroup_check(H, rng.uniform(0, T), T, 24))
    criterion("C11 P^T = P^t P^(T-t)", worst <= 1e-10, f"max defect {worst:.3g}")


def test_c12_gauss_boundary(criterion):
    n = NormalPoly.number()
    r1 = lv.gauss_boundary_check(n, range(13), L=8.0, nodes=2048)
    r2 = lv.gauss_boundary_check(n, range(13), L=8.0, nodes=4096)
    b = r1.terms["boundary_current"]
    criterion("C12 boundary currents at L=8", b < 1e-10, f"max {b:.3g} for levels <= 12")
    drift = abs(r1.residual_norm - r2.residual_norm)
    criterion("C12 two-sided report under node doubling", drift <= 1e-8 and math.isfinite(r1.residual_norm),
              f"report {r1.residual_norm:.6g}, drift {drift:.3g}")


def test_c13_symmetrized_number(criterion):
    N = 16
    M = fock.materialize(parse("ad*a + a*ad"), N).entries
    k = N - 3
    ok = np.array_equal(M[: k + 1, : k + 1], np.diag(2.0 * np.arange(k + 1) + 1))
    criterion("C13 a+a + a a+ = diag(2n+1)", ok, f"exact on n <= {k}")


def test_c14_weak_residual(criterion):
    assets = fin.AssetSpec([0.0], [1.0], [0.0])
    payoff = fin.PayoffSpec.linear([1.0])
    trial = fin.sine_trial(1.0)
    t0 = time.perf_counter()
    counts = (1_000, 10_000, 100_000)
    reports = []
    for P in counts:
        ens = fin.simulate(assets, payoff, fin.EnsembleConfig(P, 0.01, 1.0, seed=7, bridge=True, workers=4))
        reports.append(fin.weak_residual(trial, assets, payoff, ens))
    elapsed = time.perf_counter() - t0
    last = reports[-1]
    slope = float(np.polyfit(np.log(counts), np.log([r.stderr for r in reports]), 1)[0])
    criterion("C14 harmonic weak residual at P=1e5", last.within(0.0) and elapsed <= 300,
              f"{last.estimate:.3g} +- {last.stderr:.3g}, {elapsed:.1f}s")
    criterion("C14 stderr slope", abs(slope + 0.5) <= 0.1, f"slope {slope:.3f}")


def test_c15_cw(criterion):
    model = fin.CWModel(1.0, 0.2, 0.05)
    c = fin.cw_generator(model)
    rho, sig, nu = Fraction(1), Fraction(1, 5), Fraction(1, 20)
    exact = (c.drift, c.diffusion, c.noise) == (-rho, (sig**2 + nu**2) / 2, nu)
    criterion("C15 generator coefficients", exact and float(c.diffusion) == 0.02125, f"{c.drift}, {c.diffusion}, {c.noise}")
    t0 = time.perf_counter()
    r = fin.cw_validate(model, fin.TestFunction.square(), 0.5, fin.MCConfig(100_000, 1e-3, seed=0, workers=4))
    elapsed = time.perf_counter() - t0
    criterion("C15 MC generator estimate", r.within(-0.4575) and elapsed <= 300,
              f"{r.estimate:.5g} +- {r.stderr:.3g} vs -0.4575, {elapsed:.1f}s")


def test_c16_diagnostics(criterion):
    from deltacalc.reports import stable

    n = NormalPoly.number()
    el = [dyn.euler_lagrange_residual(n, N) for N in (16, 32)]
    hj = [dyn.hj_residual(1.0, 0.0, N) for N in (16, 32)]
    rho = [fock.gibbs_state(fock.materialize(n, N), 1.0).rho for N in (16, 32)]
    co = [lv.continuity_residual(n, r) for r in rho]
    rows = []
    for name, (r16, r32) in (("euler-lagrange", el), ("hamilton-jacobi", hj), ("continuity", co)):
        k = r16.exact_upto
        ok = r16.is_finite() and r32.is_finite() and stable(r16.norm_upto(k), r32.norm_upto(k))
        rows.append(ok)
        criterion(f"C16 {name} report", ok, f"{r16.norm_upto(k):.3g} vs {r32.norm_upto(k):.3g} on <= {k}")
    cl = dyn.clark_ocone_residual(n, 0.0)
    e = [dyn.clark_ocone_residual(n, 0.0, np.eye(N)[1]).expectation for N in (16, 32)]
    ok = cl.residual == NormalPoly({(1, 1): -1.0, (0, 0): -1.0}) and all(np.isfinite(e)) and stable(abs(e[0]), abs(e[1]))
    criterion("C16 clark-ocone residual", ok, str(cl.residual))


def _cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue()


def test_c17_cli(criterion):
    missing = [c for c in COMMANDS if not (GOLDEN / golden_name(c)).exists()]
    mismatched = [c for c in COMMANDS if c in CASES and _cli(CASES[c])[1] != (GOLDEN / golden_name(c)).read_text()]
    criterion("C17 golden files for every subcommand", not missing and not mismatched and set(CASES) == set(COMMANDS),
              f"{len(COMMANDS)} subcommands, {len(missing)} missing, {len(mismatched)} differ")
    code, _ = _cli(["verify", "all"])
    criterion("C17 verify all", code == 0, f"exit {code}")
    same = all(len({_cli(CASES[c] + ["--workers", str(w)])[1] for w in (1, 2, 3, 8)}) == 1
               for c in ("simulate", "weak-residual", "cw-validate", "ikw"))
    criterion("C17 seeds reproduce across worker counts", same, "workers 1, 2, 3, 8")
