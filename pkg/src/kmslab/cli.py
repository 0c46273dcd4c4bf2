"""Command line entry point: ``kmslab {quantum-check,classical-check,sweep,sample}``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .fock import (
    DimensionError,
    FockBasis,
    ModelParams,
    bose_hubbard_hamiltonian,
    interaction_operator,
    quadratic_hamiltonian,
)
from .graph import GraphError, parse_graph
from .harness import (
    DEFAULT_EPSILONS,
    SweepConfig,
    characteristic_sweep,
    commutator_limit_check,
    default_cutoff_scales,
    emit_report,
    loglog_fit,
    main_identity_check,
    moment_convergence_check,
    monotone_envelope,
    norm_estimate_check,
    run_manifest,
)
from .sampler import (
    ChainConfig,
    ConfigurationError,
    classical_kms_residual,
    estimate,
    kms_residual_integrand,
    metropolis_chain,
    quadrature_oracle_1site,
    radial_ks_distance,
)
from .thermal import (
    bogoliubov_check,
    gibbs_state,
    golden_thompson_check,
    kms_pair,
    number_moment,
    random_bounded_operator,
    saturation_check,
)

SLOPE_RANGE = (0.8, 1.2)
MIN_R2 = 0.9

CONFIG_HELP = """\
configuration keys (JSON object, unknown keys are rejected):
  graph          generator "path:n" | "cycle:n" | "complete:n" or a graph JSON file   ["path:1"]
  beta           inverse temperature                                                [1.0]
  lambda         on-site interaction, > 0                                           [1.0]
  kappa          chemical potential, < 0                                            [-1.0]
  epsilon        semiclassical parameter for quantum-check                          [0.1]
  n_max          truncation for quantum-check (null: ceil(n_max_const/epsilon))      [null]
  n_max_const    sweep truncation rule n_max = ceil(n_max_const/epsilon)            [8.0]
  epsilons       strictly decreasing sweep                                          [0.2, 0.1, 0.05, 0.025]
  observables    frequency vectors for the characteristic sweep                     [[1,...,1]]
  pairs          (f, g) pairs for commutator and main-identity checks               [[[1,...], [i,...]]]
  n_scale        chi_n cutoff scale (null: 4 max omega(N))                           [null]
  m_scale        chi_m cutoff scale (null: 2 n_scale)                               [null]
  norm_scale     cutoff scale in the norm estimates                                 [2.0]
  kms_pairs      random operator pairs in quantum-check                             [20]
  residual_pairs random (f, g) pairs in classical-check                             [10]
  seed           seed for random test data                                          [0]
  chain          {"step_scale", "n_burn", "n_samples", "thinning", "seed"}          [0.5, 5000, 100000, 1, 0]
  verbosity      0 quiet, 1 summary                                                 [1]
complex numbers are written as numbers or [re, im] pairs.
"""


class ConfigError(ValueError):
    pass


def _complex(x):
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ConfigError(f"complex entries are numbers or [re, im] pairs, got {x}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"expected a number, got {x!r}")
    return complex(x)


def _vector(v, n):
    if not isinstance(v, (list, tuple)) or len(v) != n:
        raise ConfigError(f"frequency vector must have {n} entries, got {v!r}")
    return tuple(_complex(c) for c in v)


@dataclass(frozen=True)
class RunConfig:
    graph: str = "path:1"
    beta: float = 1.0
    lam: float = 1.0
    kappa: float = -1.0
    epsilon: float = 0.1
    n_max: int | None = None
    n_max_const: float = 8.0
    epsilons: tuple = DEFAULT_EPSILONS
    observables: tuple | None = None
    pairs: tuple | None = None
    n_scale: float | None = None
    m_scale: float | None = None
    norm_scale: float = 2.0
    kms_pairs: int = 20
    residual_pairs: int = 10
    seed: int = 0
    chain: ChainConfig = field(default_factory=ChainConfig)
    verbosity: int = 1

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        names = {f.name for f in fields(cls)} - {"lam"} | {"lambda"}
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        kw = dict(doc)
        if "lambda" in kw:
            kw["lam"] = kw.pop("lambda")
        if "chain" in kw:
            ch = kw["chain"]
            if not isinstance(ch, dict):
                raise ConfigError("chain must be an object")
            bad = set(ch) - {f.name for f in fields(ChainConfig)}
            if bad:
                raise ConfigError(f"unknown chain keys: {sorted(bad)}")
            kw["chain"] = ChainConfig(**ch)
        if "epsilons" in kw:
            kw["epsilons"] = tuple(float(e) for e in kw["epsilons"])
        return cls(**kw)

    def resolve(self):
        """Graph plus validated frequency vectors and pairs."""
        try:
            g = parse_graph(self.graph)
        except (GraphError, OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad graph {self.graph!r}: {exc}") from exc
        V = g.vertex_count
        obs = (tuple(_vector(f, V) for f in self.observables) if self.observables is not None
               else ((1.0 + 0j,) * V,))
        if self.pairs is not None:
            pairs = []
            for p in self.pairs:
                if not isinstance(p, (list, tuple)) or len(p) != 2:
                    raise ConfigError(f"pairs entries must be [f, g], got {p!r}")
                pairs.append((_vector(p[0], V), _vector(p[1], V)))
            pairs = tuple(pairs)
        else:
            pairs = (((1.0 + 0j,) * V, (1j,) * V),)
        return g, obs, pairs

    def validate(self):
        """Raise on any invalid setting before work starts."""
        self.resolve()
        ModelParams(self.epsilon, self.beta, self.lam, self.kappa)
        self.sweep_config()
        if self.n_max is not None and self.n_max < 1:
            raise ConfigError(f"n_max must be positive, got {self.n_max}")
        if not self.norm_scale > 0:
            raise ConfigError(f"norm_scale must be positive, got {self.norm_scale}")
        if self.kms_pairs < 0 or self.residual_pairs < 0:
            raise ConfigError("kms_pairs and residual_pairs must be nonnegative")
        return self

    def sweep_config(self) -> SweepConfig:
        g, obs, _ = self.resolve()
        return SweepConfig(graph=g, epsilons=self.epsilons, beta=self.beta, lam=self.lam, kappa=self.kappa,
                           n_max_const=self.n_max_const, observables=obs, n_scale=self.n_scale,
                           m_scale=self.m_scale, seed=self.seed, chain=self.chain)


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(doc)


class Output:
    def __init__(self, args, cfg: RunConfig):
        self.dir = Path(args.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.format = args.format
        self.quiet = args.quiet or cfg.verbosity == 0

    def say(self, msg=""):
        if not self.quiet:
            print(msg)

    def check(self, name: str, ok: bool, detail: str = ""):
        self.say(f"{'PASS' if ok else 'FAIL'}  {name:<40s} {detail}")
        return ok

    def json(self, name: str, doc):
        (self.dir / name).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def rows(self, stem: str, rows):
        emit_report(rows, self.format, self.dir / f"{stem}.{self.format}")


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _dump_operator(path: Path, op):
    m = op.matrix.tocoo()
    with path.open("w") as fh:
        fh.write(f"# {op.basis.dim} {op.basis.dim} row col re im\n")
        for r, c, v in zip(m.row, m.col, m.data):
            fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")


def cmd_quantum_check(cfg: RunConfig, out: Output, args) -> int:
    g, _, _ = cfg.resolve()
    params = ModelParams(cfg.epsilon, cfg.beta, cfg.lam, cfg.kappa)
    n_max = cfg.n_max if cfg.n_max is not None else math.ceil(cfg.n_max_const / cfg.epsilon)
    basis = FockBasis(g.vertex_count, n_max)
    H = bose_hubbard_hamiltonian(basis, params, g)
    if args.dump_operators:
        _dump_operator(out.dir / "hamiltonian.txt", H)
    state = gibbs_state(H, cfg.beta)
    report, ok = {"epsilon": cfg.epsilon, "n_max": n_max, "dim": basis.dim}, True

    sat_ok, sat = saturation_check(g, params, n_max)
    report["saturation_change"] = sat
    ok &= out.check("truncation saturation (n_max+4)", sat_ok,
                    f"rel. change of log Z = {sat:.2e}" + ("" if sat_ok else " -> increase n_max"))

    rng = np.random.default_rng(cfg.seed)
    kms_basis = basis if basis.dim <= 1500 else basis.prefix(_prefix_cutoff(basis, 1500))
    worst = 0.0
    for _ in range(cfg.kms_pairs):
        A = random_bounded_operator(kms_basis, cfg.epsilon, rng)
        B = random_bounded_operator(kms_basis, cfg.epsilon, rng)
        lhs, rhs = kms_pair(state, H, cfg.beta, A, B)
        worst = max(worst, abs(lhs - rhs) / (1 + abs(rhs)))
    report["kms_worst_residual"] = worst
    ok &= out.check("KMS identity", worst <= 1e-9, f"worst residual {worst:.2e}")

    if basis.dim <= 2000:
        a = -cfg.beta * quadratic_hamiltonian(basis, g, cfg.epsilon, cfg.kappa).toarray()
        b = -cfg.beta * 0.5 * cfg.epsilon**2 * cfg.lam * interaction_operator(basis).toarray()
        lhs, rhs = golden_thompson_check(a, b)
        report["golden_thompson"] = [lhs, rhs]
        ok &= out.check("Golden-Thompson", lhs <= rhs * (1 + 1e-9), f"{lhs:.6g} <= {rhs:.6g}")
    else:
        out.say(f"skip  Golden-Thompson: dense dimension {basis.dim} > 2000")
    lhs, rhs = bogoliubov_check(basis, g, params)
    report["bogoliubov"] = [lhs, rhs]
    ok &= out.check("Bogoliubov bound", lhs <= rhs + 1e-9 * (1 + abs(rhs)), f"{lhs:.6g} <= {rhs:.6g}")
    report["number_moments"] = [number_moment(state, basis, cfg.epsilon, k) for k in (1, 2)]
    out.say(f"      omega(N), omega(N^2) = {report['number_moments'][0]:.6g}, {report['number_moments'][1]:.6g}")
    report["pass"] = bool(ok)
    out.json("quantum_check.json", report)
    return 0 if ok else 1


def _prefix_cutoff(basis: FockBasis, dim: int) -> int:
    k = 0
    while k < basis.n_max and basis.offsets[k + 2] <= dim:
        k += 1
    return k


def cmd_classical_check(cfg: RunConfig, out: Output, args) -> int:
    g, _, _ = cfg.resolve()
    V = g.vertex_count
    rng = np.random.default_rng(cfg.seed)
    chain = metropolis_chain(g, cfg.lam, cfg.kappa, cfg.beta, cfg.chain)
    ok, report = True, {"acceptance_rate": chain.acceptance_rate, "step_scale": chain.step_scale}
    ok &= out.check("sampler acceptance in [0.15, 0.6]", 0.15 <= chain.acceptance_rate <= 0.6,
                    f"{chain.acceptance_rate:.3f}")
    mc, quad = [], []
    for _ in range(cfg.residual_pairs):
        f = rng.normal(size=V) + 1j * rng.normal(size=V)
        gv = rng.normal(size=V) + 1j * rng.normal(size=V)
        est = classical_kms_residual(g, cfg.lam, cfg.kappa, cfg.beta, f, gv, chain.samples)
        mc.append({"f": list(f), "g": list(gv), "mean": est.mean, "se": est.std_error, "ess": est.ess})
        if V == 1:
            quad.append(abs(quadrature_oracle_1site(
                cfg.lam, cfg.kappa, cfg.beta, kms_residual_integrand(g, cfg.lam, cfg.kappa, cfg.beta, f, gv))))
    within = sum(abs(m["mean"]) <= 3 * m["se"] for m in mc)
    report["mc_residuals"] = mc
    ok &= out.check("classical KMS residual (MC, 3 SE)", within == len(mc), f"{within}/{len(mc)} within 3 SE")
    real = np.ones(V)
    trivial = estimate(kms_residual_integrand(g, cfg.lam, cfg.kappa, cfg.beta, real, real), chain.samples)
    report["real_pair_residual"] = {"mean": trivial.mean, "se": trivial.std_error}
    ok &= out.check("F = G real residual (3 SE)", abs(trivial.mean) <= 3 * trivial.std_error + 1e-15,
                    f"{abs(trivial.mean):.2e}")
    if V == 1:
        worst = max(quad) if quad else 0.0
        report["quadrature_worst_residual"] = worst
        ok &= out.check("classical KMS residual (quadrature)", worst <= 1e-6, f"worst {worst:.2e}")
        ks = radial_ks_distance(chain.samples, cfg.lam, cfg.kappa, cfg.beta)
        report["radial_ks"] = ks
        ok &= out.check("radial KS distance", ks <= 0.02, f"{ks:.4f}")
    report["pass"] = bool(ok)
    out.json("classical_check.json", report)
    return 0 if ok else 1


def _slope_ok(slope, r2):
    return SLOPE_RANGE[0] <= slope <= SLOPE_RANGE[1] and r2 >= MIN_R2


def cmd_sweep(cfg: RunConfig, out: Output, args) -> int:
    sc = cfg.sweep_config()
    _, obs, pairs = cfg.resolve()
    n_scale, m_scale = default_cutoff_scales(sc)
    sc = replace(sc, n_scale=n_scale, m_scale=m_scale)
    ok, summary = True, {}

    results = characteristic_sweep(sc, obs)
    if len(obs) == 1:
        results = [results]
    for i, rows in enumerate(results):
        out.rows(f"characteristic_{i}", rows)
        good = monotone_envelope(rows) and all(r.valid for r in rows)
        ok &= out.check(f"characteristic f#{i} envelope", good, f"gaps {rows[0].gap:.3e} -> {rows[-1].gap:.3e}")

    for i, (f, g) in enumerate(pairs):
        rows = commutator_limit_check(sc, f, g)
        out.rows(f"commutator_{i}", rows)
        if max(r.gap for r in rows) == 0:
            good, detail = True, "identically zero"
        else:
            slope, r2 = loglog_fit(rows)
            good = _slope_ok(slope, r2) and monotone_envelope(rows) and all(r.valid for r in rows)
            detail = f"slope {slope:.3f}, R2 {r2:.4f}"
            summary[f"commutator_{i}"] = {"slope": slope, "r2": r2}
        ok &= out.check(f"commutator pair#{i}", good, detail)

        try:
            rep = main_identity_check(sc, f, g)
        except DimensionError as exc:
            out.say(f"skip  main identity pair#{i}: {exc}")
            continue
        out.rows(f"main_identity_{i}", rep.convergence)
        good = rep.max_residual <= 1e-8 and (max(r.gap for r in rep.convergence) == 0
                                             or monotone_envelope(rep.convergence))
        summary[f"main_identity_{i}"] = {"max_residual": rep.max_residual,
                                         "sign_consistent": all(r.sign_consistent for r in rep.rows)}
        ok &= out.check(f"main identity pair#{i}", good, f"two-sided residual {rep.max_residual:.1e}")

    f0 = obs[0]
    if any(f0):
        try:
            norms = norm_estimate_check(sc, f0, "H", cfg.norm_scale)
            slope, r2 = loglog_fit(*zip(*norms))
            summary["norm_estimate"] = {"norms": norms, "slope": slope, "r2": r2}
            ok &= out.check("norm estimate [H, W(f)]", _slope_ok(slope, r2), f"slope {slope:.3f}, R2 {r2:.4f}")
        except DimensionError as exc:
            out.say(f"skip  norm estimate: {exc}")

    for k in (1, 2):
        rows = moment_convergence_check(sc, k)
        out.rows(f"moment_{k}", rows)
        ok &= out.check(f"number moment k={k}", monotone_envelope(rows) and all(r.valid for r in rows),
                        f"gaps {rows[0].gap:.3e} -> {rows[-1].gap:.3e}")

    out.json("manifest.json", run_manifest(sc, {"summary": summary, "pass": bool(ok)}))
    return 0 if ok else 1


def cmd_sample(cfg: RunConfig, out: Output, args) -> int:
    g, obs, _ = cfg.resolve()
    chain = metropolis_chain(g, cfg.lam, cfg.kappa, cfg.beta, cfg.chain)
    if args.dump_samples:
        np.ascontiguousarray(chain.samples, dtype=np.complex128).view(np.float64).tofile(out.dir / "samples.f64")
    norm = estimate(lambda u: np.sum(np.abs(u) ** 2, axis=-1), chain.samples)
    report = {"acceptance_rate": chain.acceptance_rate, "step_scale": chain.step_scale,
              "norm2": {"mean": norm.mean, "se": norm.std_error, "ess": norm.ess, "n": norm.n_used}}
    out.say(f"      acceptance {chain.acceptance_rate:.3f}, mu(|u|^2) = {norm.mean.real:.6f} +- {norm.std_error:.1e}"
            f" (ESS {norm.ess:.0f})")
    ok = True
    if g.vertex_count == 1:
        ks = radial_ks_distance(chain.samples, cfg.lam, cfg.kappa, cfg.beta)
        report["radial_ks"] = ks
        ok &= out.check("radial KS distance", ks <= 0.02, f"{ks:.4f}")
    report["pass"] = bool(ok)
    out.json("sample_summary.json", report)
    return 0 if ok else 1


COMMANDS = {
    "quantum-check": cmd_quantum_check,
    "classical-check": cmd_classical_check,
    "sweep": cmd_sweep,
    "sample": cmd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", default="kmslab-out", help="output directory [kmslab-out]")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="report format [csv]")
    common.add_argument("--dump-operators", action="store_true", help="write H as row/col/re/im text")
    common.add_argument("--dump-samples", action="store_true", help="write samples as float64 re/im pairs")
    common.add_argument("--quiet", action="store_true", help="no summary on standard output")
    parser = argparse.ArgumentParser(
        prog="kmslab", description="Bose-Hubbard thermal states and their classical limit.",
        epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    docs = {
        "quantum-check": "finite-dimensional KMS, Golden-Thompson, Bogoliubov and truncation checks",
        "classical-check": "classical KMS residuals, sampler calibration",
        "sweep": "epsilon sweeps against the classical limit; writes reports and a manifest",
        "sample": "standalone sampler run",
    }
    for name, text in docs.items():
        sub.add_parser(name, parents=[common], help=text, description=text, epilog=CONFIG_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args.config).validate()
    except (ConfigError, ConfigurationError, GraphError, ValueError, TypeError) as exc:
        print(f"kmslab: configuration error: {exc}", file=sys.stderr)
        return 2
    out = Output(args, cfg)
    try:
        return COMMANDS[args.command](cfg, out, args)
    except (ConfigurationError, DimensionError) as exc:
        print(f"kmslab: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
