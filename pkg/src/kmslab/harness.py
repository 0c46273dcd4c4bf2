"""Epsilon sweeps comparing truncated quantum thermal expectations with
their classical Gibbs-measure counterparts.

Every quantum quantity here involves a number cutoff chi(N_eps / n) or a
Gibbs state.  Both preserve particle-number sectors, so traces reduce exactly
to the prefix of sectors where the cutoff is non-zero.  Weyl operator entries
come from :class:`~kmslab.fock.CompressedWeyl`, i.e. they are the exact
matrix elements of the untruncated operator.
"""
from __future__ import annotations

import csv
import io
import json
import math
import subprocess
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import svds

from . import __version__
from .classical import (
    CylindricalObservable,
    poisson_cylindrical_pair,
    poisson_cylindrical_with_cutoff,
    poisson_cylindrical_with_h,
)
from .fock import (
    DIMENSION_CAP,
    MOLLIFIER,
    CompressedWeyl,
    DimensionError,
    FockBasis,
    FockOperator,
    ModelParams,
    bose_hubbard_hamiltonian,
    cutoff_values,
    fock_dimension,
    support_cutoff,
)
from .graph import Graph, path
from .sampler import ChainConfig, estimate, grid_quadrature, metropolis_chain, quadrature_oracle_1site
from .thermal import (
    RATIO_CAP,
    GibbsState,
    _ratio_matrix,
    gibbs_state,
    number_moment,
    saturation_change,
)

SCHEMA_VERSION = 1
DEFAULT_EPSILONS = (0.2, 0.1, 0.05, 0.025)
SATURATION_TOL = 1e-8
PREFLIGHT_DIM = 400
DENSE_LIMIT = 4000
CSV_COLUMNS = ("epsilon", "quantum_value", "classical_value", "gap", "truncation_tail", "mc_se")


@dataclass(frozen=True)
class SweepConfig:
    """One epsilon sweep.

    ``n_max(eps) = ceil(n_max_const / eps)``, lowered if needed to respect
    ``dimension_cap``.  ``n_scale`` / ``m_scale`` are the cutoff scales of the
    chi_n / chi_m pair; ``None`` means 4 max omega(N) and 2 n_scale.
    """

    graph: Graph = field(default_factory=lambda: path(1))
    epsilons: tuple = DEFAULT_EPSILONS
    beta: float = 1.0
    lam: float = 1.0
    kappa: float = -1.0
    n_max_const: float = 8.0
    observables: tuple = ()
    n_scale: float | None = None
    m_scale: float | None = None
    seed: int = 0
    chain: ChainConfig = field(default_factory=ChainConfig)
    dimension_cap: int = DIMENSION_CAP

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if not eps:
            raise ValueError("epsilon list is empty")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError(f"epsilons must be strictly decreasing, got {eps}")
        for e in eps:
            self.params(e)
        if not self.n_max_const > 0:
            raise ValueError(f"n_max_const must be positive, got {self.n_max_const}")
        obs = tuple(tuple(complex(c) for c in f) for f in self.observables)
        for f in obs:
            if len(f) != self.graph.vertex_count:
                raise ValueError(f"observable {f} has wrong length for {self.graph.vertex_count} vertices")
        object.__setattr__(self, "observables", obs)
        if self.n_scale is not None and not self.n_scale > 0:
            raise ValueError(f"n_scale must be positive, got {self.n_scale}")
        if self.n_scale is not None and self.m_scale is not None and self.m_scale < 2 * self.n_scale:
            raise ValueError(f"need m_scale >= 2 n_scale, got m={self.m_scale}, n={self.n_scale}")

    def params(self, epsilon: float) -> ModelParams:
        return ModelParams(epsilon, self.beta, self.lam, self.kappa)

    def n_max(self, epsilon: float) -> int:
        n = math.ceil(self.n_max_const / epsilon - 1e-9)
        while n > 1 and fock_dimension(self.graph.vertex_count, n + 4) > self.dimension_cap:
            n -= 1
        return n

    def to_json(self) -> dict:
        d = asdict(self)
        d["graph"] = self.graph.to_json()
        d["observables"] = [[[c.real, c.imag] for c in f] for f in self.observables]
        d["epsilons"] = list(self.epsilons)
        return d


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    quantum_value: complex
    classical_value: complex
    gap: float
    truncation_tail: float
    mc_se: float
    valid: bool = True


@dataclass(frozen=True, eq=False)
class ThermalModel:
    """Gibbs state at cutoff n_max with its saturation diagnostic."""

    epsilon: float
    basis: FockBasis
    hamiltonian: FockOperator
    state: GibbsState
    saturation: float

    @property
    def saturated(self) -> bool:
        return self.saturation <= SATURATION_TOL


@lru_cache(maxsize=6)
def _thermal_model(graph: Graph, params: ModelParams, n_max: int, cap: int) -> ThermalModel:
    big = FockBasis(graph.vertex_count, n_max + 4, cap)
    H_big = bose_hubbard_hamiltonian(big, params, graph)
    big_state = gibbs_state(H_big, params.beta)
    basis = big.prefix(n_max)
    return ThermalModel(params.epsilon, basis, H_big.restrict(basis), big_state.truncated(n_max),
                        saturation_change(big_state, n_max))


def thermal_model(cfg: SweepConfig, epsilon: float) -> ThermalModel:
    """Cached model at cfg's n_max(epsilon); the guard compares with n_max + 4."""
    return _thermal_model(cfg.graph, cfg.params(epsilon), cfg.n_max(epsilon), cfg.dimension_cap)


def _sector_blocks(state: GibbsState, K: int):
    dec = state.decomposition
    for k in range(K + 1):
        yield dec.blocks[k], dec.vectors[k], state.weights[k]


def weyl_expectation(model: ThermalModel, f) -> complex:
    """omega_eps(W(f)) using only sector-diagonal blocks of W(f)."""
    cw = CompressedWeyl(model.basis, f, model.epsilon)
    total = 0.0 + 0.0j
    for b, u, p in _sector_blocks(model.state, model.basis.n_max):
        idx = np.arange(b.start, b.stop)
        w = cw.block(idx, idx)
        total += np.sum(p * np.sum(u.conj() * (w @ u), axis=0))
    return complex(total)


def default_cutoff_scales(cfg: SweepConfig):
    """(n_scale, m_scale) with the documented defaults filled in."""
    n = cfg.n_scale
    if n is None:
        n = 4.0 * max(number_moment(thermal_model(cfg, e).state, thermal_model(cfg, e).basis, e, 1)
                      for e in cfg.epsilons)
    m = cfg.m_scale if cfg.m_scale is not None else 2.0 * n
    if m < 2 * n:
        raise ValueError(f"need m_scale >= 2 n_scale, got m={m}, n={n}")
    return float(n), float(m)


# classical side

_CHAIN_CACHE: dict = {}


def classical_expectation(cfg: SweepConfig, functional, radii=(), method: str = "auto"):
    """mu(functional) and its standard error.

    With ``method="auto"``: one vertex uses adaptive quadrature (``radii``
    are breakpoints), two vertices a product-grid quadrature, larger graphs
    Metropolis samples.  ``method="sampler"`` forces the Metropolis route.
    """
    if method not in ("auto", "sampler"):
        raise ValueError(f"method must be 'auto' or 'sampler', got {method!r}")
    V = cfg.graph.vertex_count
    if method == "auto" and V == 1:
        return quadrature_oracle_1site(cfg.lam, cfg.kappa, cfg.beta, functional, radii), 0.0
    if method == "auto" and V == 2:
        return grid_quadrature(cfg.graph, cfg.lam, cfg.kappa, cfg.beta, functional, radii), 0.0
    key = (cfg.graph, cfg.lam, cfg.kappa, cfg.beta, cfg.chain)
    if key not in _CHAIN_CACHE:
        _CHAIN_CACHE.clear()
        _CHAIN_CACHE[key] = metropolis_chain(cfg.graph, cfg.lam, cfg.kappa, cfg.beta, cfg.chain).samples
    est = estimate(functional, _CHAIN_CACHE[key])
    return est.mean, est.std_error


def _cutoff_radii(*scales):
    return tuple(sorted({r for s in scales for r in (math.sqrt(s / 2), math.sqrt(s))}))


def _chi(n_scale):
    return lambda x: MOLLIFIER.scaled(x, n_scale)


def _chi_prime(n_scale):
    return lambda x: MOLLIFIER.scaled_derivative(x, n_scale)


def _norm2(u):
    return np.sum(np.abs(u) ** 2, axis=-1)


def commutator_target(cfg: SweepConfig, f, g, n_scale: float):
    """Classical limit of omega([B_m, A_n] / (i eps)).

    Sum of mu(chi_n^2 {G, F}), mu(chi_n {G, chi_n} F) and mu(chi_n {chi_n, F} G)
    for the phases F, G with frequencies f, g (exponent scale sqrt 2).
    """
    F, G = CylindricalObservable(f), CylindricalObservable(g)
    chi, dchi = _chi(n_scale), _chi_prime(n_scale)

    def integrand(u):
        c = chi(_norm2(u))
        t1 = c**2 * poisson_cylindrical_pair(g, f, u)
        t2 = c * poisson_cylindrical_with_cutoff(g, u, dchi) * F(u)
        t3 = -c * poisson_cylindrical_with_cutoff(f, u, dchi) * G(u)
        return t1 + t2 + t3

    return classical_expectation(cfg, integrand, _cutoff_radii(n_scale))


def main_identity_target(cfg: SweepConfig, f, g, n_scale: float):
    """beta mu(chi_n^2 {G, h} F), with G in the first slot of the bracket."""
    F = CylindricalObservable(f)
    chi = _chi(n_scale)

    def integrand(u):
        return cfg.beta * chi(_norm2(u)) ** 2 * poisson_cylindrical_with_h(
            g, u, cfg.graph, cfg.lam, cfg.kappa) * F(u)

    return classical_expectation(cfg, integrand, _cutoff_radii(n_scale))


# quantum side

def _cutoff_prefix(model: ThermalModel, n_scale: float):
    K = min(support_cutoff(model.epsilon, n_scale), model.basis.n_max)
    sub = model.basis.prefix(K)
    return sub, cutoff_values(sub, model.epsilon, n_scale)


def _twisted_trace(model, sub, chi, X: CompressedWeyl, Y: CompressedWeyl) -> complex:
    """tr(rho chi X chi Y) over the prefix ``sub``, assembled in row chunks."""
    cols = np.arange(sub.dim)
    total = 0.0 + 0.0j
    for rng in sub.chunks():
        rows = np.arange(rng.start, rng.stop)
        rho = model.state.density_on(rng)
        m = rho @ (chi[rows, None] * X.block(rows, cols) * chi[None, :])
        total += np.sum(m * Y.block(cols, rows).T)
    return complex(total)


def quantum_commutator(model: ThermalModel, f, g, n_scale: float) -> complex:
    """omega([B_m, A_n]) / (i eps) with A_n = chi_n W(f) chi_n, B_m = chi_m W(g) chi_m.

    Uses chi_n chi_m = chi_n and [rho, chi] = 0 to reduce to
    tr(rho chi_n W(g) chi_n W(f)) - tr(rho chi_n W(f) chi_n W(g)).
    """
    sub, chi = _cutoff_prefix(model, n_scale)
    wf = CompressedWeyl(model.basis, f, model.epsilon)
    wg = CompressedWeyl(model.basis, g, model.epsilon)
    diff = _twisted_trace(model, sub, chi, wg, wf) - _twisted_trace(model, sub, chi, wf, wg)
    return diff / (1j * model.epsilon)


def _fit(eps, values):
    x, y = np.log(np.asarray(eps)), np.log(np.asarray(values))
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    return float(slope), float(1 - np.sum(resid**2) / ss) if ss > 0 else 1.0


def loglog_fit(rows_or_eps, values=None):
    """Least-squares slope of log(value) against log(eps) and its R^2."""
    if values is None:
        rows = list(rows_or_eps)
        return _fit([r.epsilon for r in rows], [r.gap for r in rows])
    return _fit(rows_or_eps, values)


def monotone_envelope(rows, factor: float = 0.5) -> bool:
    """max gap over the last two epsilons <= factor * max over the first two."""
    gaps = [r.gap for r in rows]
    if len(gaps) < 4:
        return gaps[-1] <= factor * gaps[0] if len(gaps) > 1 else True
    return max(gaps[-2:]) <= factor * max(gaps[:2])


def exactness_preflight(model: ThermalModel, f, g, n_scale: float, m_scale: float, tol: float = 1e-9) -> bool:
    """Finite-dimensional identities that must hold before any limit is read off.

    Checks chi_n chi_m = chi_n on the spectrum, normalisation of the state,
    and the KMS pair for cut-off Weyl operators on a sector-aligned prefix.
    """
    basis, eps = model.basis, model.epsilon
    cn = cutoff_values(basis, eps, n_scale)
    cm = cutoff_values(basis, eps, m_scale)
    if np.max(np.abs(cn * cm - cn)) > 1e-15:
        return False
    if abs(sum(w.sum() for w in model.state.weights) - 1) > 1e-12:
        return False
    K = 0
    while K < basis.n_max and basis.offsets[K + 2] <= PREFLIGHT_DIM:
        K += 1
    sub = basis.prefix(K)
    idx = np.arange(sub.dim)
    chi = cutoff_values(sub, eps, n_scale)
    a = chi[:, None] * CompressedWeyl(basis, f, eps).block(idx, idx) * chi[None, :]
    b = chi[:, None] * CompressedWeyl(basis, g, eps).block(idx, idx) * chi[None, :]
    rho = model.state.density(sub.dim)
    u, e = model.state.decomposition.restricted(slice(0, sub.dim))
    bt = u.conj().T @ b @ u
    alpha_b = u @ (bt * _ratio_matrix(model.state.beta, bt, e, RATIO_CAP)) @ u.conj().T
    lhs = np.sum((rho @ a) * alpha_b.T)
    rhs = np.sum((rho @ b) * a.T)
    return bool(abs(lhs - rhs) <= tol * (1 + abs(rhs)))


def _row(eps, q, c, model, se, valid=True):
    return ConvergenceRow(float(eps), complex(q), complex(c), float(abs(q - c)),
                          float(model.state.tail_weight()), float(se), bool(valid and model.saturated))


def characteristic_sweep(cfg: SweepConfig, observables=None) -> list:
    """omega_eps(W(f)) against mu(exp(i sqrt2 Re<f,u>)) for each observable.

    Returns one list of rows (epsilon descending) per observable when several
    are given, or a single list for one observable.
    """
    obs = cfg.observables if observables is None else tuple(observables)
    if not obs:
        raise ValueError("no observables configured")
    out = []
    for f in obs:
        f = np.asarray(f, dtype=complex)
        target, se = classical_expectation(cfg, CylindricalObservable(f))
        rows = []
        for eps in cfg.epsilons:
            model = thermal_model(cfg, eps)
            rows.append(_row(eps, weyl_expectation(model, f), target, model, se))
        out.append(rows)
    return out[0] if len(out) == 1 else out


def commutator_limit_check(cfg: SweepConfig, f, g) -> list:
    """Rows of omega([B_m, A_n]/(i eps)) against its classical bracket limit."""
    f, g = np.asarray(f, dtype=complex), np.asarray(g, dtype=complex)
    n_scale, m_scale = default_cutoff_scales(cfg)
    target, se = commutator_target(cfg, f, g, n_scale)
    rows = []
    for eps in cfg.epsilons:
        model = thermal_model(cfg, eps)
        ok = exactness_preflight(model, f, g, n_scale, m_scale)
        rows.append(_row(eps, quantum_commutator(model, f, g, n_scale), target, model, se, ok))
    return rows


@dataclass(frozen=True)
class MainIdentityRow:
    epsilon: float
    lhs: complex
    lhs_stable: complex
    rhs: complex
    linearized: complex
    beta_derivative: complex
    residual: float

    @property
    def sign_consistent(self) -> bool:
        """Diagnostic: the beta-derivative of the left side matches [B_m, H]/(i eps)."""
        return bool(abs(self.beta_derivative - self.linearized) <= 1e-4 * (1 + abs(self.linearized)))


@dataclass(frozen=True)
class MainIdentityReport:
    rows: tuple
    convergence: tuple
    n_scale: float
    m_scale: float

    @property
    def max_residual(self) -> float:
        return max(r.residual for r in self.rows)


def _dense_cutoff_weyl(model, sub, chi, f):
    idx = np.arange(sub.dim)
    return chi[:, None] * CompressedWeyl(model.basis, f, model.epsilon).block(idx, idx) * chi[None, :]


def main_identity_check(cfg: SweepConfig, f, g, beta_step: float = 1e-7) -> MainIdentityReport:
    """Both sides of omega(A_n (alpha(B_m) - B_m)/(i eps)) = omega([B_m, A_n]/(i eps)).

    The left side is evaluated twice: with eigenbasis Boltzmann ratios and in
    the stable form (tr(A rho B) - tr(rho A B)) / (i eps).  Because A_n lives
    on sectors where chi_m = 1, every trace reduces exactly to that prefix.
    Each row also carries beta omega(A_n [B_m, H]/(i eps)) and the
    beta-derivative of the left operator (diagnostics for the bracket sign).
    """
    f, g = np.asarray(f, dtype=complex), np.asarray(g, dtype=complex)
    n_scale, m_scale = default_cutoff_scales(cfg)
    target, se = main_identity_target(cfg, f, g, n_scale)
    rows, conv = [], []
    for eps in cfg.epsilons:
        model = thermal_model(cfg, eps)
        sub, chi_n = _cutoff_prefix(model, n_scale)
        if sub.dim > DENSE_LIMIT:
            raise DimensionError(
                f"main identity prefix has dimension {sub.dim} > {DENSE_LIMIT}; use a smaller n_scale"
            )
        chi_m = cutoff_values(sub, eps, m_scale)
        a = _dense_cutoff_weyl(model, sub, chi_n, f)
        b = _dense_cutoff_weyl(model, sub, chi_m, g)
        rho = model.state.density(sub.dim)
        u, e = model.state.decomposition.restricted(slice(0, sub.dim))
        bt = u.conj().T @ b @ u
        ratio = _ratio_matrix(cfg.beta, bt, e, RATIO_CAP)
        x = u @ (bt * (ratio - 1.0)) @ u.conj().T / (1j * eps)
        ra = rho @ a
        lhs = complex(np.sum(ra * x.T))
        lhs_stable = complex((np.sum((a @ rho) * b.T) - np.sum(ra * b.T)) / (1j * eps))
        rhs = complex((np.sum((rho @ b) * a.T) - np.sum(ra * b.T)) / (1j * eps))
        h = model.hamiltonian.restrict(sub).toarray()
        lin = complex(cfg.beta * np.sum(ra * ((b @ h - h @ b) / (1j * eps)).T))
        small = _ratio_matrix(beta_step, bt, e, RATIO_CAP)
        xd = u @ (bt * (small - 1.0)) @ u.conj().T / (1j * eps * beta_step)
        deriv = complex(cfg.beta * np.sum(ra * xd.T))
        residual = abs(lhs - rhs) / max(1.0, abs(rhs))
        residual = max(residual, abs(lhs_stable - rhs) / max(1.0, abs(rhs)))
        rows.append(MainIdentityRow(eps, lhs, lhs_stable, rhs, lin, deriv, float(residual)))
        ok = exactness_preflight(model, f, g, n_scale, m_scale)
        conv.append(_row(eps, lhs, target, model, se, ok))
    return MainIdentityReport(tuple(rows), tuple(conv), n_scale, m_scale)


def _spectral_norm(m: np.ndarray) -> float:
    if min(m.shape) <= 200:
        return float(np.linalg.norm(m, 2))
    s = svds(m, k=1, tol=1e-10, return_singular_vectors=False, random_state=0)
    return float(s[0])


def norm_estimate_check(cfg: SweepConfig, f, generator: str = "H", cutoff_scale: float = 2.0) -> list:
    """Spectral norms of chi [X, W(f)] chi with chi = chi(N_eps / cutoff_scale).

    ``generator`` is "H" for the Hamiltonian or "N" for the number operator.
    Returns a list of (epsilon, norm).
    """
    f = np.asarray(f, dtype=complex)
    out = []
    for eps in cfg.epsilons:
        model = thermal_model(cfg, eps)
        sub, chi = _cutoff_prefix(model, cutoff_scale)
        if sub.dim > DENSE_LIMIT:
            raise DimensionError(f"norm estimate prefix has dimension {sub.dim} > {DENSE_LIMIT}")
        idx = np.arange(sub.dim)
        w = CompressedWeyl(model.basis, f, eps).block(idx, idx)
        if generator == "H":
            x = model.hamiltonian.restrict(sub).matrix
            comm = x @ w - w @ x
        elif generator == "N":
            n = eps * sub.totals
            comm = n[:, None] * w - w * n[None, :]
        else:
            raise ValueError(f"generator must be 'H' or 'N', got {generator!r}")
        out.append((float(eps), _spectral_norm(chi[:, None] * np.asarray(comm) * chi[None, :])))
    return out


def moment_convergence_check(cfg: SweepConfig, k: int) -> list:
    """omega_eps(N_eps^k) against mu(|u|^{2k})."""
    if k < 0:
        raise ValueError(f"moment order must be nonnegative, got {k}")
    target, se = classical_expectation(cfg, lambda u: _norm2(u) ** k)
    rows = []
    for eps in cfg.epsilons:
        model = thermal_model(cfg, eps)
        rows.append(_row(eps, number_moment(model.state, model.basis, eps, k), target, model, se))
    return rows


def truncation_shift(run, cfg: SweepConfig, factor: float = 2.0):
    """Largest |change of quantum value| / gap when n_max_const is multiplied by ``factor``."""
    base = run(cfg)
    wide = run(replace(cfg, n_max_const=cfg.n_max_const * factor))
    return max(abs(a.quantum_value - b.quantum_value) / max(a.gap, 1e-300) for a, b in zip(base, wide))


# reports

def _fmt(x: float) -> str:
    return format(x, ".17g")


def _fmt_complex(z: complex) -> str:
    return f"{_fmt(z.real)}{'+' if math.copysign(1, z.imag) > 0 else '-'}{_fmt(abs(z.imag))}j"


def report_text(rows, fmt: str = "csv") -> str:
    rows = list(rows)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r.epsilon), _fmt_complex(r.quantum_value), _fmt_complex(r.classical_value),
                        _fmt(r.gap), _fmt(r.truncation_tail), _fmt(r.mc_se)])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "columns": list(CSV_COLUMNS) + ["valid"],
            "rows": [
                {
                    "epsilon": r.epsilon,
                    "quantum_value": [r.quantum_value.real, r.quantum_value.imag],
                    "classical_value": [r.classical_value.real, r.classical_value.imag],
                    "gap": r.gap,
                    "truncation_tail": r.truncation_tail,
                    "mc_se": r.mc_se,
                    "valid": r.valid,
                }
                for r in rows
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(rows, fmt: str = "csv", path=None) -> str:
    """Render rows as CSV or JSON; also write to ``path`` when given."""
    text = report_text(rows, fmt)
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_json_report(text: str) -> list:
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {doc.get('schema_version')}")
    return [
        ConvergenceRow(r["epsilon"], complex(*r["quantum_value"]), complex(*r["classical_value"]),
                       r["gap"], r["truncation_tail"], r["mc_se"], r["valid"])
        for r in doc["rows"]
    ]


def build_identifier() -> str:
    """git-describe style identifier, falling back to the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).parent, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def run_manifest(cfg: SweepConfig, extra: dict | None = None) -> dict:
    n_scale, m_scale = (cfg.n_scale, cfg.m_scale)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "build": build_identifier(),
        "sweep": cfg.to_json(),
        "n_max": {repr(e): cfg.n_max(e) for e in cfg.epsilons},
        "n_scale": n_scale,
        "m_scale": m_scale,
        "seeds": {"sweep": cfg.seed, "chain": cfg.chain.seed},
    }
    if extra:
        doc.update(extra)
    return doc
