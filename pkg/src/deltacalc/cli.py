"""Command-line front end: ``deltacalc <command> [options]``.

Every command runs one library operation and prints its JSON encoding
(keys sorted, floats in shortest round-trip form).  ``simulate`` can emit
CSV instead.  Exit status is 0 on success, 1 when a ``verify`` suite fails
and 2 on parse or configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dynamics as dyn
from . import finance as fin
from . import fock
from . import liouville as lv
from . import opalg
from . import verify as _verify
from .parser import parse
from .reports import dumps, matrix_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dim: int = 32
    beta: float = 1.0
    omega: float = 1.0
    tau: float = 1.0
    t: float = 1.0
    q: float = 1.0
    paths: int = 10_000
    dt: float = 0.01
    seed: int = 0
    workers: int = 1
    format: str = "json"
    out: str | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"--dim must be >= 1, got {self.dim}")
        if not self.beta > 0:
            raise ConfigError(f"--beta must be positive, got {self.beta}")
        if not self.q > 0:
            raise ConfigError(f"--q must be positive, got {self.q}")
        if self.paths < 1 or self.workers < 1 or self.seed < 0:
            raise ConfigError("--paths and --workers must be >= 1 and --seed >= 0")
        if not self.dt > 0:
            raise ConfigError(f"--dt must be positive, got {self.dt}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"--format must be json or csv, got {self.format!r}")

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        return cls(**{k: getattr(ns, k) for k in cls.__dataclass_fields__})


# -- argument helpers --------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _complexes(text: str) -> np.ndarray:
    try:
        return np.array([complex(v.replace("i", "j")) for v in text.split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"expected comma-separated complex numbers, got {text!r}") from None


def _poly(src: str, cfg: RunConfig) -> opalg.NormalPoly:
    return opalg.normal_order(parse(src), cfg.q)


def _hamiltonian(src: str | None, cfg: RunConfig) -> opalg.NormalPoly:
    return dyn.HamiltonianSpec.free(cfg.omega).poly if src is None else _poly(src, cfg)


def _state(ns, cfg: RunConfig, N: int) -> np.ndarray:
    if ns.coeffs is not None:
        c = _complexes(ns.coeffs)
        if c.size > N:
            raise ConfigError(f"{c.size} coefficients exceed --dim {N}")
        return np.concatenate([c, np.zeros(N - c.size)])
    return fock.basis_state(ns.state, N)


def _rho(spec: str, cfg: RunConfig) -> np.ndarray:
    """``basis:n``, ``gibbs`` (free Hamiltonian at --beta, --omega) or ``pure:c0,c1,...``."""
    N = cfg.dim
    kind, _, arg = spec.partition(":")
    if kind == "basis":
        n = int(arg)
        return fock.outer(n, n, N)
    if kind == "gibbs":
        return fock.gibbs_state(dyn.HamiltonianSpec.free(cfg.omega).matrix(N), cfg.beta).rho.entries
    if kind == "pure":
        c = _complexes(arg)
        if c.size > N:
            raise ConfigError(f"{c.size} coefficients exceed --dim {N}")
        v = np.concatenate([c, np.zeros(N - c.size)])
        v = v / np.linalg.norm(v)
        return np.outer(v, v.conj())
    raise ConfigError(f"unknown density {spec!r}; use basis:n, gibbs or pure:c0,c1,...")


def _assets(ns) -> fin.AssetSpec:
    drift = _floats(ns.drift)
    n = len(drift)
    vol = _floats(ns.vol) if ns.vol is not None else [1.0] * n
    u0 = _floats(ns.u0) if ns.u0 is not None else [0.0] * n
    kappa = _floats(ns.kappa) if ns.kappa is not None else None
    return fin.AssetSpec(drift, vol, u0, kappa)


def _payoff(ns, n: int) -> fin.PayoffSpec:
    f0 = _floats(ns.noise_coef) if ns.noise_coef is not None else None
    if ns.payoff == "zero":
        return fin.PayoffSpec.zero(n) if f0 is None else fin.PayoffSpec.quadratic(f0=f0, n=n)
    if ns.payoff == "linear":
        return fin.PayoffSpec.quadratic(g=np.ones(n), f0=f0, n=n)
    return fin.PayoffSpec.quadratic(Q=2 * np.eye(n), f0=f0, n=n)


def _ensemble(ns, cfg: RunConfig, bridge: bool | None = None) -> tuple:
    assets = _assets(ns)
    payoff = _payoff(ns, assets.n)
    ec = fin.EnsembleConfig(
        cfg.paths, cfg.dt, ns.horizon, cfg.seed, ns.bridge if bridge is None else bridge, cfg.workers
    )
    return assets, payoff, fin.simulate(assets, payoff, ec)


# -- commands ----------------------------------------------------------------

COMMANDS: dict[str, tuple[Callable, Callable]] = {}


def command(name: str, setup: Callable | None = None):
    def deco(fn):
        COMMANDS[name] = (fn, setup or (lambda p: None))
        return fn

    return deco


def _expr_arg(p, *names):
    for n in names:
        p.add_argument(n, help="operator expression, e.g. 'ad*a + 0.5'")


def _h_arg(p):
    p.add_argument("hamiltonian", nargs="?", default=None, help="hermitian expression (default: free oscillator at --omega)")


def _wrt_arg(p):
    p.add_argument("--wrt", choices=["a", "ad"], default="a")


def _state_args(p):
    p.add_argument("--state", type=int, default=0, help="basis state index")
    p.add_argument("--coeffs", default=None, help="comma-separated amplitudes, overrides --state")


def _rho_arg(p):
    p.add_argument("--rho", default="basis:1", help="basis:n | gibbs | pure:c0,c1,...")


def _asset_args(p):
    p.add_argument("--drift", default="0", help="comma-separated drifts, one per asset")
    p.add_argument("--vol", default=None)
    p.add_argument("--u0", default=None)
    p.add_argument("--kappa", default=None, help="linear mean-reversion rates")
    p.add_argument("--payoff", choices=["zero", "linear", "square"], default="square")
    p.add_argument("--noise-coef", dest="noise_coef", default=None, help="constant noise loadings f_i")
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--bridge", action="store_true")


@command("norm-order", lambda p: _expr_arg(p, "expr"))
def _norm_order(ns, cfg):
    return {"normal_form": _poly(ns.expr, cfg)}


@command("anti-order", lambda p: _expr_arg(p, "expr"))
def _anti_order(ns, cfg):
    return {"anti_normal_form": opalg.anti_normal_order(parse(ns.expr), cfg.q)}


@command("dagger", lambda p: _expr_arg(p, "expr"))
def _dagger(ns, cfg):
    return {"dagger": opalg.hermitian_conjugate(_poly(ns.expr, cfg))}


@command("commutator", lambda p: _expr_arg(p, "x", "y"))
def _commutator(ns, cfg):
    return {"commutator": opalg.commutator(parse(ns.x), parse(ns.y), cfg.q)}


@command("dderiv", lambda p: (_expr_arg(p, "expr"), _wrt_arg(p)))
def _dderiv(ns, cfg):
    return {"derivative": opalg.delta_deriv(parse(ns.expr), ns.wrt, cfg.q)}


@command("dint", lambda p: (_expr_arg(p, "expr"), _wrt_arg(p)))
def _dint(ns, cfg):
    return {"integral": opalg.delta_integral(parse(ns.expr), ns.wrt, cfg.q)}


@command("to-pq", lambda p: _expr_arg(p, "expr"))
def _to_pq(ns, cfg):
    return {"pq": str(opalg.to_pq(_poly(ns.expr, cfg)))}


def _materialize_setup(p):
    _expr_arg(p, "expr")
    p.add_argument("--word", action="store_true", help="multiply the literal word instead of its normal form")


@command("materialize", _materialize_setup)
def _materialize(ns, cfg):
    e = parse(ns.expr)
    M = fock.materialize(e if ns.word else opalg.normal_order(e, cfg.q), cfg.dim)
    return {**matrix_json(M.entries), "exact_upto": M.exact_upto}


@command("gibbs", _h_arg)
def _gibbs(ns, cfg):
    g = fock.gibbs_state(fock.materialize(_hamiltonian(ns.hamiltonian, cfg), cfg.dim), cfg.beta)
    n = fock.materialize(opalg.NormalPoly.number(), cfg.dim)
    return {
        "Z": g.Z,
        "beta": g.beta,
        "dim": cfg.dim,
        "energy": fock.expectation(g.H_ref, g.rho).real,
        "mean_number": fock.expectation(n, g.rho).real,
    }


def _gns_setup(p):
    _expr_arg(p, "x", "y")
    p.add_argument("--hamiltonian", default=None)


@command("gns", _gns_setup)
def _gns(ns, cfg):
    g = fock.gibbs_state(fock.materialize(_hamiltonian(ns.hamiltonian, cfg), cfg.dim), cfg.beta)
    X, Y = (fock.materialize(_poly(s, cfg), cfg.dim) for s in (ns.x, ns.y))
    return {"inner": fock.gns_inner(X, Y, g)}


def _evolve_setup(p):
    _h_arg(p)
    _state_args(p)
    p.add_argument("--mode", choices=["real", "euclidean"], default="real")


@command("evolve", _evolve_setup)
def _evolve(ns, cfg):
    mode = dyn.EvolutionMode(ns.mode)
    time = cfg.t if mode is dyn.EvolutionMode.REAL else cfg.tau
    H = dyn.HamiltonianSpec(_hamiltonian(ns.hamiltonian, cfg))
    phi = dyn.evolve_state(H, _state(ns, cfg, cfg.dim), time, mode, cfg.dim)
    return {"mode": mode.value, "time": time, "state": phi}


@command("ou", _state_args)
def _ou(ns, cfg):
    return {"coeffs": dyn.ou_evolve(_state(ns, cfg, cfg.dim), cfg.omega, cfg.tau)}


@command("heisenberg", lambda p: _expr_arg(p, "hamiltonian", "operator"))
def _heisenberg(ns, cfg):
    H = dyn.HamiltonianSpec(_poly(ns.hamiltonian, cfg))
    A = fock.materialize(_poly(ns.operator, cfg), cfg.dim)
    return matrix_json(dyn.heisenberg_evolve(H, A, cfg.t).entries)


def _hamilton_setup(p):
    _expr_arg(p, "hamiltonian")
    p.add_argument("--pairing", choices=["adopted", "literal"], default="adopted")


@command("hamilton", _hamilton_setup)
def _hamilton(ns, cfg):
    da, dad = dyn.hamilton_rhs(_poly(ns.hamiltonian, cfg), ns.pairing)
    return {"a_dot": da, "ad_dot": dad, "pairing": ns.pairing}


def _energy_setup(p):
    _h_arg(p)
    _state_args(p)
    p.add_argument("--times", default="0,1,2,5,10")


@command("energy", _energy_setup)
def _energy(ns, cfg):
    times = _floats(ns.times)
    H = dyn.HamiltonianSpec(_hamiltonian(ns.hamiltonian, cfg))
    phi = _state(ns, cfg, cfg.dim)
    phi = phi / np.linalg.norm(phi)
    energies, dev = dyn.energy_series(H, phi, times, cfg.dim)
    return {"times": times, "energies": energies, "deviation": dev}


def _action_setup(p):
    p.add_argument("--E", type=float, default=0.0, help="energy constant")


@command("action", _action_setup)
def _action(ns, cfg):
    S = dyn.action_operator(cfg.omega, cfg.t, ns.E, cfg.dim)
    return {"action": S.poly, "E": S.E, "omega": S.omega, "t": S.t, "matrix": matrix_json(S.S.entries)}


def _lagrangian_setup(p):
    _expr_arg(p, "hamiltonian")
    p.add_argument("--adot", default=None, help="velocity of a; with --addot selects the ladder form")
    p.add_argument("--addot", default=None)


@command("lagrangian", _lagrangian_setup)
def _lagrangian(ns, cfg):
    H = _poly(ns.hamiltonian, cfg)
    if (ns.adot is None) != (ns.addot is None):
        raise ConfigError("--adot and --addot must be given together")
    if ns.adot is None:
        return {"lagrangian": dyn.lagrangian_pq(H)}
    return {"lagrangian": dyn.lagrangian_density(H, _poly(ns.adot, cfg), _poly(ns.addot, cfg))}


@command("el-check", lambda p: _expr_arg(p, "hamiltonian"))
def _el_check(ns, cfg):
    return dyn.euler_lagrange_residual(_poly(ns.hamiltonian, cfg), cfg.dim).to_dict()


@command("hj-check", _action_setup)
def _hj_check(ns, cfg):
    return dyn.hj_residual(cfg.omega, cfg.t, cfg.dim, ns.E).to_dict()


def _velocity_setup(p):
    _expr_arg(p, "hamiltonian")
    p.add_argument("--kind", choices=["covariant", "current"], default="covariant")


@command("velocity", _velocity_setup)
def _velocity(ns, cfg):
    H = _poly(ns.hamiltonian, cfg)
    v = dyn.covariant_velocity(H) if ns.kind == "covariant" else lv.velocity_operator(H)
    return {"kind": ns.kind, "velocity": v}


def _semigroup_setup(p):
    _h_arg(p)
    p.add_argument("--T", type=float, default=2.0, help="total time; --t is the split point")


@command("semigroup", _semigroup_setup)
def _semigroup(ns, cfg):
    return {"defect": dyn.semigroup_check(_hamiltonian(ns.hamiltonian, cfg), cfg.t, ns.T, cfg.dim)}


def _clark_setup(p):
    _expr_arg(p, "hamiltonian")
    p.add_argument("--lam", type=float, default=0.0)


@command("clark-ocone", _clark_setup)
def _clark(ns, cfg):
    return dyn.clark_ocone_residual(_poly(ns.hamiltonian, cfg), ns.lam).to_dict()


def _liouvillian_setup(p):
    _expr_arg(p, "hamiltonian")
    p.add_argument("--include-v", dest="include_v", action="store_true")


@command("liouvillian", _liouvillian_setup)
def _liouvillian(ns, cfg):
    H = _poly(ns.hamiltonian, cfg)
    V = fock.materialize(dyn.covariant_velocity(H), cfg.dim) if ns.include_v else None
    return lv.build_liouvillian(fock.materialize(H, cfg.dim), V, ns.include_v).to_dict()


def _series_setup(p):
    _expr_arg(p, "hamiltonian")
    _rho_arg(p)
    p.add_argument("--order", type=int, default=3)


@command("series-evolve", _series_setup)
def _series(ns, cfg):
    theta = lv.build_liouvillian(fock.materialize(_poly(ns.hamiltonian, cfg), cfg.dim))
    return matrix_json(lv.series_evolve(theta, _rho(ns.rho, cfg), cfg.t, ns.order).entries)


def _divergence_setup(p):
    _rho_arg(p)
    p.add_argument("--ladder", action="store_true", help="assemble from left/right ladder actions")


@command("divergence", _divergence_setup)
def _divergence(ns, cfg):
    fn = lv.parity_divergence_ladder if ns.ladder else lv.parity_divergence
    return matrix_json(fn(_rho(ns.rho, cfg), cfg.dim).entries)


@command("current", lambda p: (_expr_arg(p, "hamiltonian"), _rho_arg(p)))
def _current(ns, cfg):
    return matrix_json(lv.current(_poly(ns.hamiltonian, cfg), _rho(ns.rho, cfg), cfg.dim).entries)


@command("continuity", lambda p: (_expr_arg(p, "hamiltonian"), _rho_arg(p)))
def _continuity(ns, cfg):
    return lv.continuity_residual(_poly(ns.hamiltonian, cfg), _rho(ns.rho, cfg), cfg.dim).to_dict()


def _gauss_setup(p):
    _expr_arg(p, "hamiltonian")
    p.add_argument("--levels", type=int, default=12, help="highest Fock level")
    p.add_argument("--L", type=float, default=8.0, help="half-width of the interval")
    p.add_argument("--nodes", type=int, default=2048)
    p.add_argument("--include-v", dest="include_v", action="store_true")


@command("gauss-check", _gauss_setup)
def _gauss(ns, cfg):
    H = _poly(ns.hamiltonian, cfg)
    return lv.gauss_boundary_check(H, range(ns.levels + 1), ns.L, ns.nodes, ns.include_v).to_dict()


def _simulate_setup(p):
    _asset_args(p)
    p.add_argument("--max-paths", dest="max_paths", type=int, default=None, help="rows of paths in CSV output")


@command("simulate", _simulate_setup)
def _simulate(ns, cfg):
    _, _, ens = _ensemble(ns, cfg)
    if cfg.format == "csv":
        return ens.to_csv(ns.max_paths)
    arr = ens.paths
    n = ens.assets.n
    final = arr[:, -1, :]
    return {
        "paths": ens.P,
        "steps": arr.shape[1] - 1,
        "dt": ens.dt,
        "seed": ens.seed,
        "bridge": ens.bridge,
        "mean_U_T": np.sum(final[:, :n], axis=0) / ens.P,
        "mean_F_T": float(np.sum(final[:, n]) / ens.P),
    }


def _ikw_setup(p):
    _asset_args(p)
    p.add_argument("--path", type=int, default=0)


@command("ikw", _ikw_setup)
def _ikw(ns, cfg):
    assets, payoff, ens = _ensemble(ns, cfg)
    if not 0 <= ns.path < ens.P:
        raise ConfigError(f"--path must be in [0, {ens.P})")
    r = fin.ikw_terms(assets, payoff, ens.path(ns.path), ens.dt)
    return {"path": ns.path, "steps": {k: v for k, v in r.items()}, "sums": {k: float(np.sum(v)) for k, v in r.items()}}


@command("weak-residual", _asset_args)
def _weak(ns, cfg):
    assets, payoff, ens = _ensemble(ns, cfg, bridge=True)
    return fin.weak_residual(fin.sine_trial(ens.T), assets, payoff, ens).to_dict()


def _current_a_setup(p):
    _asset_args(p)
    p.add_argument("--x", default="0", help="state at which to evaluate the current")
    p.add_argument("--W", default=None, help="noise values (default zero)")


@command("current-a", _current_a_setup)
def _current_a(ns, cfg):
    assets = _assets(ns)
    W = None if ns.W is None else _floats(ns.W)
    return fin.probability_current_A(assets, _payoff(ns, assets.n), _floats(ns.x), W)


def _generator_setup(p):
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--lam", default="0", help="complex linear coefficient, e.g. 0.5+0.2i")
    p.add_argument("--c", type=float, default=0.0)


@command("generator", _generator_setup)
def _generator(ns, cfg):
    lam = _complexes(ns.lam)
    if lam.size != 1:
        raise ConfigError("--lam takes one complex number")
    return {"generator": fin.generator_canonical(ns.sigma, complex(lam[0]), ns.c)}


def _cw_setup(p):
    p.add_argument("--rho-mr", dest="rho_mr", type=float, default=1.0, help="mean-reversion rate")
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--nu", type=float, default=0.05)


@command("cw-generator", _cw_setup)
def _cw_generator(ns, cfg):
    return fin.cw_generator(fin.CWModel(ns.rho_mr, ns.sigma, ns.nu)).to_dict()


_TESTFNS = {"square": fin.TestFunction.square, "linear": fin.TestFunction.linear, "constant": fin.TestFunction.constant}


def _cw_validate_setup(p):
    _cw_setup(p)
    p.add_argument("--test", choices=sorted(_TESTFNS), default="square")
    p.add_argument("--alpha0", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=5)


@command("cw-validate", _cw_validate_setup)
def _cw_validate(ns, cfg):
    model = fin.CWModel(ns.rho_mr, ns.sigma, ns.nu)
    mc = fin.MCConfig(cfg.paths, cfg.dt, ns.steps, cfg.seed, cfg.workers)
    return fin.cw_validate(model, _TESTFNS[ns.test](), ns.alpha0, mc).to_dict()


def _verify_setup(p):
    p.add_argument("suite", nargs="?", default="all", choices=["all", *_verify.SUITES])


@command("verify", _verify_setup)
def _verify_cmd(ns, cfg):
    checks = _verify.run(ns.suite)
    for c in checks:
        print(c.line(), file=sys.stderr)
    return {
        "suite": ns.suite,
        "passed": all(c.passed for c in checks),
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks],
    }


# -- entry point -------------------------------------------------------------


def _common_parser() -> argparse.ArgumentParser:
    d = RunConfig()
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--dim", type=int, default=d.dim, help="Fock truncation N")
    g.add_argument("--beta", type=float, default=d.beta)
    g.add_argument("--omega", type=float, default=d.omega)
    g.add_argument("--tau", type=float, default=d.tau, help="Euclidean time")
    g.add_argument("--t", type=float, default=d.t, help="real time")
    g.add_argument("--q", type=float, default=d.q, help="deformation parameter")
    g.add_argument("--paths", type=int, default=d.paths)
    g.add_argument("--dt", type=float, default=d.dt)
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--workers", type=int, default=d.workers)
    g.add_argument("--format", choices=["json", "csv"], default=d.format)
    g.add_argument("--out", default=None, help="write output to this file instead of stdout")
    return p


HELP = {
    "norm-order": "normal-ordered form of an expression",
    "anti-order": "anti-normal-ordered form",
    "dagger": "hermitian conjugate",
    "commutator": "commutator [x, y] in normal form",
    "dderiv": "delta-derivative with respect to a or ad",
    "dint": "delta-integral with respect to a or ad",
    "to-pq": "rewrite in position and momentum",
    "materialize": "truncated Fock matrix of an expression",
    "gibbs": "partition function and thermal averages",
    "gns": "thermal inner product Tr(x y+ rho)",
    "evolve": "real or euclidean time evolution of a state",
    "ou": "Ornstein-Uhlenbeck flow of number-basis coefficients",
    "heisenberg": "Heisenberg-picture operator at time t",
    "hamilton": "equations of motion from delta-derivatives",
    "energy": "energy expectation along a trajectory",
    "action": "action operator and its matrix",
    "lagrangian": "Lagrangian of a Hamiltonian",
    "el-check": "Euler-Lagrange residual report",
    "hj-check": "Hamilton-Jacobi residual report",
    "velocity": "velocity operator",
    "semigroup": "semigroup composition defect",
    "clark-ocone": "Clark-Ocone reconstruction residual",
    "liouvillian": "Liouvillian superoperator as an N^2 x N^2 matrix",
    "series-evolve": "truncated series evolution of a density matrix",
    "divergence": "parity divergence of a density matrix",
    "current": "probability current v rho",
    "continuity": "continuity-equation residual report",
    "gauss-check": "boundary currents and the Gauss identity on a grid",
    "simulate": "Monte Carlo ensemble (CSV paths or JSON summary)",
    "ikw": "per-step Ito expansion terms along one path",
    "weak-residual": "weak-form residual against a trial function",
    "current-a": "drift current at a point",
    "generator": "canonical generator polynomial",
    "cw-generator": "abnormal-return generator coefficients",
    "cw-validate": "Monte Carlo check of the abnormal-return generator",
    "verify": "run a named self-check suite (or all)",
}


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="deltacalc", description="Ladder-operator algebra and its numerical companions.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, setup) in COMMANDS.items():
        setup(sub.add_parser(name, parents=[common], help=HELP.get(name), description=HELP.get(name)))
    return parser


def run(cmd: str, ns: argparse.Namespace, cfg: RunConfig) -> tuple[int, str]:
    """Execute ``cmd`` and return ``(exit code, serialized output)``."""
    fn, _ = COMMANDS[cmd]
    result = fn(ns, cfg)
    if isinstance(result, str):
        return EXIT_OK, result
    if cfg.format == "csv":
        raise ConfigError(f"{cmd} has no CSV form")
    code = EXIT_FAIL if cmd == "verify" and not result["passed"] else EXIT_OK
    return code, dumps(result) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        cfg = RunConfig.from_args(ns)
        code, text = run(ns.command, ns, cfg)
    except (ValueError, TypeError) as e:
        # ParseError, ConfigError and library precondition failures
        print(f"deltacalc {ns.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
