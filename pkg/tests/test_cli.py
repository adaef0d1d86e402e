import contextlib
import io
import json
import math
import pathlib
import subprocess
import sys

import numpy as np
import pytest

from cli_cases import CASES, golden_name
from deltacalc import dynamics as dyn
from deltacalc import finance as fin
from deltacalc import fock
from deltacalc import liouville as lv
from deltacalc import opalg
from deltacalc.cli import COMMANDS, main
from deltacalc.parser import parse
from deltacalc.reports import dumps, matrix_json
from deltacalc.verify import delta_inverse

GOLDEN = pathlib.Path(__file__).parent / "golden"
P = lambda s: opalg.normal_order(parse(s))  # noqa: E731


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def test_every_command_has_a_case():
    assert set(CASES) == set(COMMANDS)
    assert len(COMMANDS) == 36


@pytest.mark.parametrize("cmd", sorted(CASES))
def test_golden(cmd):
    code, out, _ = run_cli(CASES[cmd])
    assert code == 0
    assert out == (GOLDEN / golden_name(cmd)).read_text()


def _ensemble(P_, dt, drift=0.0, vol=1.0, u0=0.0, payoff=None, seed=0, bridge=False):
    assets = fin.AssetSpec([drift], [vol], [u0])
    return assets, payoff, fin.simulate(assets, payoff, fin.EnsembleConfig(P_, dt, 1.0, seed, bridge))


def _library(cmd):
    """Direct library call for each golden case."""
    H0 = dyn.HamiltonianSpec.free(1.0)
    free = H0.poly
    if cmd == "norm-order":
        return {"normal_form": P("a*ad")}
    if cmd == "anti-order":
        return {"anti_normal_form": opalg.anti_normal_order(parse("ad^2*a^2"))}
    if cmd == "dagger":
        return {"dagger": opalg.hermitian_conjugate(P("(2+1i)*a + ad^2*a"))}
    if cmd == "commutator":
        return {"commutator": opalg.commutator(parse("ad*a"), parse("a"))}
    if cmd == "dderiv":
        return {"derivative": opalg.delta_deriv(parse("ad^2*a^3"), "a")}
    if cmd == "dint":
        return {"integral": opalg.delta_integral(parse("ad^2*a^3"), "a")}
    if cmd == "to-pq":
        return {"pq": str(opalg.to_pq(P("ad*a")))}
    if cmd == "materialize":
        M = fock.materialize(P("ad*a"), 3)
        return {**matrix_json(M.entries), "exact_upto": M.exact_upto}
    if cmd == "gibbs":
        g = fock.gibbs_state(fock.materialize(free, 40), 1.0)
        n = fock.materialize(opalg.NormalPoly.number(), 40)
        return {"Z": g.Z, "beta": 1.0, "dim": 40, "energy": fock.expectation(g.H_ref, g.rho).real,
                "mean_number": fock.expectation(n, g.rho).real}
    if cmd == "gns":
        g = fock.gibbs_state(fock.materialize(free, 40), 1.0)
        A = fock.materialize(opalg.NormalPoly.a(), 40)
        return {"inner": fock.gns_inner(A, A, g)}
    if cmd == "evolve":
        return {"mode": "euclidean", "time": 0.5, "state": dyn.evolve_state(H0, np.eye(6)[2], 0.5, "euclidean", 6)}
    if cmd == "ou":
        return {"coeffs": dyn.ou_evolve(np.array([1, 0.5, 0.25, 0.125], dtype=complex), 1.0, 1.0)}
    if cmd == "heisenberg":
        return matrix_json(dyn.heisenberg_evolve(P("ad*a"), fock.materialize(opalg.NormalPoly.a(), 4), 0.7).entries)
    if cmd == "hamilton":
        da, dad = dyn.hamilton_rhs(P("ad^2*a^2"))
        return {"a_dot": da, "ad_dot": dad, "pairing": "adopted"}
    if cmd == "energy":
        e, d = dyn.energy_series(H0, np.eye(16)[2], [0.0, 1.0, 5.0], 16)
        return {"times": [0.0, 1.0, 5.0], "energies": e, "deviation": d}
    if cmd == "action":
        S = dyn.action_operator(1.0, 0.0, 0.0, 4)
        return {"action": S.poly, "E": 0.0, "omega": 1.0, "t": 0.0, "matrix": matrix_json(S.S.entries)}
    if cmd == "lagrangian":
        return {"lagrangian": dyn.lagrangian_pq(P("ad*a"))}
    if cmd == "el-check":
        return dyn.euler_lagrange_residual(P("ad*a"), 16).to_dict()
    if cmd == "hj-check":
        return dyn.hj_residual(1.0, 0.0, 16).to_dict()
    if cmd == "velocity":
        return {"kind": "covariant", "velocity": dyn.covariant_velocity(P("ad^2*a^2"))}
    if cmd == "semigroup":
        return {"defect": dyn.semigroup_check(free, 0.3, 1.0, 24)}
    if cmd == "clark-ocone":
        return dyn.clark_ocone_residual(P("ad*a"), 0.0).to_dict()
    if cmd == "liouvillian":
        return lv.build_liouvillian(fock.materialize(P("ad*a"), 3)).to_dict()
    if cmd == "series-evolve":
        th = lv.build_liouvillian(fock.materialize(P("ad*a + 0.1*(a + ad)"), 4))
        return matrix_json(lv.series_evolve(th, fock.outer(1, 1, 4), 0.1, 2).entries)
    if cmd == "divergence":
        return matrix_json(lv.parity_divergence(fock.outer(0, 0, 3), 3).entries)
    if cmd == "current":
        return matrix_json(lv.current(P("ad*a"), fock.outer(0, 0, 4), 4).entries)
    if cmd == "continuity":
        rho = fock.gibbs_state(H0.matrix(16), 1.0).rho.entries
        return lv.continuity_residual(P("ad*a"), rho, 16).to_dict()
    if cmd == "gauss-check":
        return lv.gauss_boundary_check(P("ad*a"), range(7), 8.0, 2048).to_dict()
    if cmd == "simulate":
        pay = fin.PayoffSpec.quadratic(Q=2 * np.eye(1), f0=[0.2], n=1)
        _, _, ens = _ensemble(3, 0.25, 0.1, 0.5, 1.0, pay)
        return ens.to_csv()
    if cmd == "ikw":
        pay = fin.PayoffSpec.quadratic(Q=2 * np.eye(1), f0=[0.2], n=1)
        a, p, ens = _ensemble(4, 0.25, 0.1, 0.5, 0.0, pay)
        r = fin.ikw_terms(a, p, ens.path(2), ens.dt)
        return {"path": 2, "steps": r, "sums": {k: float(np.sum(v)) for k, v in r.items()}}
    if cmd == "weak-residual":
        pay = fin.PayoffSpec.quadratic(g=np.ones(1), n=1)
        a, p, ens = _ensemble(2000, 0.05, payoff=pay, seed=3, bridge=True)
        return fin.weak_residual(fin.sine_trial(1.0), a, p, ens).to_dict()
    if cmd == "current-a":
        a = fin.AssetSpec([0.0], [1.0], [0.0])
        return fin.probability_current_A(a, fin.PayoffSpec.quadratic(g=np.ones(1), n=1), [2.0])
    if cmd == "generator":
        return {"generator": fin.generator_canonical(1.5, 0.5 + 0.25j, 1.0)}
    if cmd == "cw-generator":
        return fin.cw_generator(fin.CWModel(1.0, 0.2, 0.05)).to_dict()
    if cmd == "cw-validate":
        mc = fin.MCConfig(4000, 1e-3, 5, 1, 1)
        return fin.cw_validate(fin.CWModel(1.0, 0.2, 0.05), fin.TestFunction.square(), 0.5, mc).to_dict()
    if cmd == "verify":
        checks = delta_inverse()
        return {"suite": "delta-inverse", "passed": True,
                "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks]}
    raise KeyError(cmd)


@pytest.mark.parametrize("cmd", sorted(CASES))
def test_matches_library_call(cmd):
    _, out, _ = run_cli(CASES[cmd])
    lib = _library(cmd)
    assert out == (lib if isinstance(lib, str) else dumps(lib) + "\n")


def test_documented_normal_form_output():
    _, out, _ = run_cli(["norm-order", "a*ad"])
    assert json.loads(out) == {"normal_form": [{"m": 1, "n": 1, "re": 1, "im": 0}, {"m": 0, "n": 0, "re": 1, "im": 0}]}


def test_materialize_diagonal():
    _, out, _ = run_cli(["materialize", "--dim", "3", "ad*a"])
    doc = json.loads(out)
    M = np.array([complex(*e) for e in doc["entries"]]).reshape(3, 3)
    assert np.array_equal(M, np.diag([0, 1, 2]))


def test_golden_values_against_closed_forms():
    gibbs = json.loads((GOLDEN / "gibbs.json").read_text())
    assert abs(gibbs["Z"] - math.exp(-0.5) / (1 - math.exp(-1))) <= 1e-12
    assert abs(gibbs["mean_number"] - 1 / math.expm1(1)) <= 1e-12
    gns = json.loads((GOLDEN / "gns.json").read_text())
    assert abs(gns["inner"][0] - (1 + 1 / math.expm1(1))) <= 1e-12
    ou = json.loads((GOLDEN / "ou.json").read_text())
    assert abs(ou["coeffs"][0][0] - math.exp(-0.5)) <= 1e-15
    cw = json.loads((GOLDEN / "cw-generator.json").read_text())
    assert cw["exact"]["diffusion"] == "17/800"


def test_outputs_are_lossless_and_sorted():
    _, out, _ = run_cli(CASES["heisenberg"])
    doc = json.loads(out)
    assert out.strip() == json.dumps(doc, sort_keys=True)
    M = dyn.heisenberg_evolve(P("ad*a"), fock.materialize(opalg.NormalPoly.a(), 4), 0.7).entries
    assert [complex(*e) for e in doc["entries"]] == list(M.ravel())


def test_unicode_alias_input_ascii_output():
    _, out, _ = run_cli(["dagger", "a†*a†*a"])
    assert "†" not in out and json.loads(out)["dagger"][0] == {"m": 1, "n": 2, "re": 1.0, "im": 0.0}


def test_verify_success_exit_code():
    assert run_cli(["verify", "delta-inverse"])[0] == 0


def test_verify_failure_exit_code(monkeypatch):
    from deltacalc import verify

    monkeypatch.setitem(verify.SUITES, "delta-inverse", lambda: [verify.Check("forced", False)])
    code, out, err = run_cli(["verify", "delta-inverse"])
    assert code == 1 and "FAIL forced" in err and json.loads(out)["passed"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ["norm-order", "a*"],
        ["norm-order", "b"],
        ["gibbs", "--beta", "0"],
        ["materialize", "--dim", "2", "ad^2*a"],
        ["norm-order", "q*a", "--q", "0.5"],
        ["cw-validate", "--dt", "0.01", "--paths", "10"],
        ["divergence", "--rho", "nonsense"],
        ["norm-order", "a", "--format", "csv"],
        ["bogus-command"],
        ["verify", "no-such-suite"],
    ],
)
def test_usage_errors_exit_two(argv):
    assert run_cli(argv)[0] == 2


def test_out_file(tmp_path):
    target = tmp_path / "o.json"
    assert run_cli(["norm-order", "a*ad", "--out", str(target)])[0] == 0
    assert target.read_text() == (GOLDEN / "norm-order.json").read_text()


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "deltacalc.cli", "norm-order", "a*ad"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == (GOLDEN / "norm-order.json").read_text()
    bad = subprocess.run([sys.executable, "-m", "deltacalc.cli", "norm-order", "a*"], capture_output=True, text=True)
    assert bad.returncode == 2 and "position 2" in bad.stderr


@pytest.mark.parametrize("cmd", ["simulate", "weak-residual", "cw-validate", "ikw"])
def test_monte_carlo_independent_of_workers(cmd):
    outs = {run_cli(CASES[cmd] + ["--workers", str(w)])[1] for w in (1, 2, 4)}
    assert len(outs) == 1
