"""CLI invocations shared by the golden-file tests and the regeneration script."""

CASES = {
    "norm-order": ["norm-order", "a*ad"],
    "anti-order": ["anti-order", "ad^2*a^2"],
    "dagger": ["dagger", "(2+1i)*a + ad^2*a"],
    "commutator": ["commutator", "ad*a", "a"],
    "dderiv": ["dderiv", "ad^2*a^3", "--wrt", "a"],
    "dint": ["dint", "ad^2*a^3", "--wrt", "a"],
    "to-pq": ["to-pq", "ad*a"],
    "materialize": ["materialize", "--dim", "3", "ad*a"],
    "gibbs": ["gibbs", "--dim", "40", "--beta", "1", "--omega", "1"],
    "gns": ["gns", "a", "a", "--dim", "40"],
    "evolve": ["evolve", "--dim", "6", "--state", "2", "--mode", "euclidean", "--tau", "0.5"],
    "ou": ["ou", "--dim", "4", "--coeffs", "1,0.5,0.25,0.125", "--tau", "1"],
    "heisenberg": ["heisenberg", "--dim", "4", "--t", "0.7", "ad*a", "a"],
    "hamilton": ["hamilton", "ad^2*a^2"],
    "energy": ["energy", "--dim", "16", "--state", "2", "--times", "0,1,5"],
    "action": ["action", "--dim", "4", "--t", "0"],
    "lagrangian": ["lagrangian", "ad*a"],
    "el-check": ["el-check", "--dim", "16", "ad*a"],
    "hj-check": ["hj-check", "--dim", "16", "--t", "0"],
    "velocity": ["velocity", "ad^2*a^2"],
    "semigroup": ["semigroup", "--dim", "24", "--T", "1", "--t", "0.3"],
    "clark-ocone": ["clark-ocone", "ad*a"],
    "liouvillian": ["liouvillian", "--dim", "3", "ad*a"],
    "series-evolve": ["series-evolve", "--dim", "4", "--t", "0.1", "--order", "2", "ad*a + 0.1*(a + ad)", "--rho", "basis:1"],
    "divergence": ["divergence", "--dim", "3", "--rho", "basis:0"],
    "current": ["current", "--dim", "4", "ad*a", "--rho", "basis:0"],
    "continuity": ["continuity", "--dim", "16", "ad*a", "--rho", "gibbs"],
    "gauss-check": ["gauss-check", "ad*a", "--levels", "6"],
    "simulate": ["simulate", "--paths", "3", "--dt", "0.25", "--drift", "0.1", "--vol", "0.5", "--u0", "1", "--noise-coef", "0.2", "--format", "csv"],
    "ikw": ["ikw", "--paths", "4", "--dt", "0.25", "--drift", "0.1", "--vol", "0.5", "--noise-coef", "0.2", "--path", "2"],
    "weak-residual": ["weak-residual", "--paths", "2000", "--dt", "0.05", "--payoff", "linear", "--seed", "3"],
    "current-a": ["current-a", "--vol", "1", "--payoff", "linear", "--x", "2"],
    "generator": ["generator", "--sigma", "1.5", "--lam", "0.5+0.25i", "--c", "1"],
    "cw-generator": ["cw-generator", "--rho-mr", "1", "--sigma", "0.2", "--nu", "0.05"],
    "cw-validate": ["cw-validate", "--paths", "4000", "--dt", "1e-3", "--alpha0", "0.5", "--seed", "1"],
    "verify": ["verify", "delta-inverse"],
}


def golden_name(cmd: str) -> str:
    return cmd + (".csv" if "--format" in CASES[cmd] and "csv" in CASES[cmd] else ".json")
