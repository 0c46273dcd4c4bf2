"""Integration against the classical Gibbs measure exp(-beta h) / z.

Random-walk Metropolis on the real coordinates of C^V gives estimates with
batch-means error bars.  Deterministic quadratures serve as oracles:
adaptive polar quadrature for one vertex and a product polar grid for two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .classical import (
    CylindricalObservable,
    gibbs_log_density,
    poisson_cylindrical_pair,
    poisson_cylindrical_with_h,
)
from .graph import Graph

TARGET_ACCEPTANCE = 0.35
TAIL_LOG = math.log(1e16)


class ConfigurationError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChainConfig:
    step_scale: float = 0.5
    n_burn: int = 5000
    n_samples: int = 100_000
    thinning: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (self.step_scale > 0 and math.isfinite(self.step_scale)):
            raise ConfigurationError(f"step_scale must be positive, got {self.step_scale}")
        if self.n_burn < 0:
            raise ConfigurationError(f"n_burn must be nonnegative, got {self.n_burn}")
        if self.n_samples < 1:
            raise ConfigurationError(f"n_samples must be positive, got {self.n_samples}")
        if self.thinning < 1:
            raise ConfigurationError(f"thinning must be positive, got {self.thinning}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class MCEstimate:
    mean: complex
    std_error: float
    ess: float
    n_used: int


@dataclass(frozen=True, eq=False)
class ChainResult:
    """Samples (n_samples, |V|) plus tuning diagnostics.

    ``transitions`` holds logged proposals as rows (current, proposed,
    log_accept_ratio) when logging was requested.
    """

    samples: np.ndarray
    acceptance_rate: float
    step_scale: float
    transitions: list


def _energy_function(g: Graph, lam: float, kappa: float):
    edges = list(g.edges)
    V = g.vertex_count

    def energy(x):
        # x holds real parts then imaginary parts
        e = 0.0
        for i, j in edges:
            dr = x[i] - x[j]
            di = x[V + i] - x[V + j]
            e += dr * dr + di * di
        for k in range(V):
            r2 = x[k] * x[k] + x[V + k] * x[V + k]
            e += -kappa * r2 + 0.5 * lam * r2 * r2
        return e

    return energy


def metropolis_chain(g: Graph, lam: float, kappa: float, beta: float, config: ChainConfig,
                     log_transitions: int = 0) -> ChainResult:
    """Random-walk Metropolis targeting exp(-beta h).

    The Gaussian proposal scale is tuned toward 35% acceptance during burn-in
    and frozen afterwards.  The first ``log_transitions`` post-burn-in
    proposals are recorded for detailed-balance checks.
    """
    if not beta > 0:
        raise ConfigurationError(f"beta must be positive, got {beta}")
    V = g.vertex_count
    energy = _energy_function(g, lam, kappa)
    rng = np.random.default_rng(config.seed)
    x = [0.0] * (2 * V)
    ex = energy(x)
    step = config.step_scale

    window, accepted, done = 100, 0, 0
    noise = rng.standard_normal((config.n_burn, 2 * V)).tolist()
    logu = np.log(rng.random(config.n_burn)).tolist()
    for t in range(config.n_burn):
        y = [a + step * b for a, b in zip(x, noise[t])]
        ey = energy(y)
        if logu[t] < -beta * (ey - ex):
            x, ex = y, ey
            accepted += 1
        done += 1
        if done == window:
            step *= math.exp(accepted / window - TARGET_ACCEPTANCE)
            accepted = done = 0

    n_total = config.n_samples * config.thinning
    out = np.empty((config.n_samples, 2 * V))
    noise = rng.standard_normal((n_total, 2 * V)).tolist()
    logu = np.log(rng.random(n_total)).tolist()
    transitions = []
    accepted = 0
    for t in range(n_total):
        y = [a + step * b for a, b in zip(x, noise[t])]
        ey = energy(y)
        log_ratio = -beta * (ey - ex)
        if t < log_transitions:
            transitions.append((np.array(x), np.array(y), log_ratio))
        if logu[t] < log_ratio:
            x, ex = y, ey
            accepted += 1
        if (t + 1) % config.thinning == 0:
            out[(t + 1) // config.thinning - 1] = x
    rate = accepted / n_total
    if not 0.05 <= rate <= 0.9:
        raise ConfigurationError(
            f"acceptance rate {rate:.3f} outside [0.05, 0.9] after tuning (step {step:.3g}); "
            "change step_scale or lengthen burn-in"
        )
    samples = out[:, :V] + 1j * out[:, V:]
    return ChainResult(samples, rate, step, transitions)


def acceptance_ratio(g: Graph, lam: float, kappa: float, beta: float, u, v) -> float:
    """Metropolis ratio pi(v)/pi(u) for a symmetric proposal."""
    return float(np.exp(gibbs_log_density(g, lam, kappa, beta, v) - gibbs_log_density(g, lam, kappa, beta, u)))


def _geyer_ess(x: np.ndarray) -> float:
    """Effective sample size via the initial positive sequence estimator."""
    n = len(x)
    x = x - x.mean()
    var = np.dot(x, x) / n
    if var == 0 or n < 4:
        return float(n)
    m = 1 << (2 * n - 1).bit_length()
    fx = np.fft.rfft(x, m)
    acf = np.fft.irfft(fx * np.conj(fx), m)[:n] / (n * var)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = acf[k] + acf[k + 1]
        if pair <= 0:
            break
        tau += 2 * pair
    return float(min(n, n / max(tau, 1e-12)))


def estimate(functional, samples) -> MCEstimate:
    """Sample mean with batch-means standard error (floor(sqrt n) batches)."""
    samples = np.asarray(samples)
    vals = np.asarray(functional(samples), dtype=complex)
    if vals.ndim == 0:
        vals = np.full(len(samples), vals)
    return estimate_values(vals)


def estimate_values(vals) -> MCEstimate:
    vals = np.asarray(vals, dtype=complex)
    n = len(vals)
    mean = complex(vals.mean())
    nb = int(math.isqrt(n))
    if nb < 2:
        return MCEstimate(mean, float("inf") if n > 1 else 0.0, float(n), n)
    size = n // nb
    batches = vals[n - nb * size :].reshape(nb, size).mean(axis=1)
    var = np.var(batches.real, ddof=1) + np.var(batches.imag, ddof=1)
    se = float(np.sqrt(var / nb))
    parts = [p for p in (vals.real, vals.imag) if np.ptp(p) > 0]
    ess = min((_geyer_ess(p) for p in parts), default=float(n))
    return MCEstimate(mean, se, ess, n)


def merge_estimates(estimates) -> MCEstimate:
    """Inverse-variance weighted combination of independent estimates."""
    estimates = list(estimates)
    if any(e.std_error == 0 for e in estimates):
        exact = [e for e in estimates if e.std_error == 0]
        return MCEstimate(exact[0].mean, 0.0, sum(e.ess for e in estimates), sum(e.n_used for e in estimates))
    w = np.array([1 / e.std_error**2 for e in estimates])
    mean = complex(np.sum(w * np.array([e.mean for e in estimates])) / w.sum())
    return MCEstimate(mean, float(1 / np.sqrt(w.sum())), sum(e.ess for e in estimates),
                      sum(e.n_used for e in estimates))


def kms_residual_integrand(g: Graph, lam: float, kappa: float, beta: float, f, g_vec, scale: float = 1.0):
    """Pointwise beta {h,G} F - {F,G} for G, F the phases with frequencies g_vec, f."""
    F = CylindricalObservable(f, scale)

    def integrand(u):
        lhs = -beta * poisson_cylindrical_with_h(g_vec, u, g, lam, kappa, scale) * F(u)
        rhs = -poisson_cylindrical_pair(g_vec, f, u, scale)
        return lhs - rhs

    return integrand


def classical_kms_residual(g: Graph, lam: float, kappa: float, beta: float, f, g_vec, samples,
                           scale: float = 1.0) -> MCEstimate:
    """Estimate of beta mu({h,G} F) - mu({F,G}) on one sample stream."""
    return estimate(kms_residual_integrand(g, lam, kappa, beta, f, g_vec, scale), samples)


def _radial_energy(lam, kappa, r):
    r2 = r * r
    return -kappa * r2 + 0.5 * lam * r2 * r2


def tail_radius(lam: float, kappa: float, beta: float, n_vertices: int = 1) -> float:
    """Radius beyond which beta h < log(1e16) fails for every admissible field.

    Uses h(u) >= -kappa |u|^2 + lam |u|^4 / (2 |V|).
    """
    a, b = -kappa, lam / (2 * n_vertices)
    r2 = (-a + math.sqrt(a * a + 4 * b * TAIL_LOG / beta)) / (2 * b)
    return math.sqrt(r2)


def quadrature_oracle_1site(lam: float, kappa: float, beta: float, functional, breakpoints=(),
                            tol: float = 1e-8) -> complex:
    """Normalised mu(functional) on one vertex by adaptive polar quadrature.

    Radial integrals use adaptive Gauss-Kronrod (``breakpoints`` are radii
    where the integrand has kinks or steep features); the angular integral is
    a trapezoid rule, spectrally accurate for periodic integrands, doubled
    until two successive values agree to ``tol``/100.
    """
    R = tail_radius(lam, kappa, beta)
    pts = sorted(p for p in breakpoints if 0 < p < R)

    def radial(fn):
        kw = dict(epsabs=tol * 1e-3, epsrel=1e-12, limit=400)
        if pts:
            kw["points"] = pts
        val, err = integrate.quad(fn, 0.0, R, **kw)
        if not err < tol:
            raise QuadratureError(f"radial quadrature error {err:.2e} above {tol:.0e}")
        return val

    def weight(r):
        return 2 * np.pi * r * np.exp(-beta * _radial_energy(lam, kappa, r))

    z = radial(weight)
    prev = None
    m = 32
    while m <= 16384:
        theta = 2 * np.pi * np.arange(m) / m
        phases = np.exp(1j * theta)

        def ang(r):
            return np.mean(np.asarray(functional((r * phases)[:, None]), dtype=complex))

        val = complex(radial(lambda r: (ang(r) * weight(r)).real),
                      radial(lambda r: (ang(r) * weight(r)).imag)) / z
        if prev is not None and abs(val - prev) < tol * 1e-2:
            return val
        prev, m = val, 2 * m
    raise QuadratureError("angular refinement did not converge")


def radial_cdf(lam: float, kappa: float, beta: float):
    """CDF of |u| under the one-vertex Gibbs measure."""
    R = tail_radius(lam, kappa, beta)
    grid = np.linspace(0.0, R, 4001)
    dens = grid * np.exp(-beta * _radial_energy(lam, kappa, grid))
    cum = integrate.cumulative_simpson(dens, x=grid, initial=0.0)
    cum /= cum[-1]
    return lambda r: np.interp(r, grid, cum)


def radial_ks_distance(samples, lam: float, kappa: float, beta: float) -> float:
    """Kolmogorov-Smirnov distance between sampled |u| and the exact radial law."""
    r = np.abs(np.asarray(samples)).reshape(-1)
    return float(stats.kstest(r, radial_cdf(lam, kappa, beta)).statistic)


def _panel_nodes(edges, n):
    x, w = np.polynomial.legendre.leggauss(n)
    nodes, weights = [], []
    for a, b in zip(edges, edges[1:]):
        nodes.append(0.5 * (b - a) * (x + 1) + a)
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def grid_quadrature(g: Graph, lam: float, kappa: float, beta: float, functional, radii=(),
                    n_radial: int = 24, n_polar: int = 24, n_angle: int = 48) -> complex:
    """Normalised mu(functional) for graphs with one or two vertices.

    Hyperspherical product grid: |u| on Gauss-Legendre panels split at
    ``radii`` (where the functional changes character, e.g. cutoff edges),
    Gauss-Legendre in the polar angle between the two moduli, trapezoid in
    each phase.  Two vertices use u = |u| (cos p e^{i t1}, sin p e^{i t2}).
    """
    V = g.vertex_count
    if V > 2:
        raise ValueError(f"grid quadrature supports at most 2 vertices, got {V}")
    R = tail_radius(lam, kappa, beta, V)
    edges = [0.0] + sorted(r for r in set(radii) if 0 < r < R) + [R]
    rho, w_rho = _panel_nodes(edges, n_radial)
    theta = 2 * np.pi * np.arange(n_angle) / n_angle
    w_theta = 2 * np.pi / n_angle
    if V == 1:
        u = (rho[:, None] * np.exp(1j * theta)[None, :]).reshape(-1, 1)
        d = np.repeat(w_rho * rho, n_angle) * w_theta * np.exp(gibbs_log_density(g, lam, kappa, beta, u))
        return complex(np.sum(d * functional(u)) / d.sum())
    p, w_p = _panel_nodes([0.0, 0.5 * np.pi], n_polar)
    e = np.exp(1j * theta)
    shape = (n_polar, n_angle, n_angle)
    a1 = (np.cos(p)[:, None, None] * e[None, :, None] * np.ones(shape)).reshape(-1)
    a2 = (np.sin(p)[:, None, None] * e[None, None, :] * np.ones(shape)).reshape(-1)
    w_ang = (np.cos(p) * np.sin(p) * w_p)[:, None, None] * np.full(shape, w_theta**2)
    w_ang = w_ang.reshape(-1)
    num, den = 0.0 + 0.0j, 0.0
    for r, wr in zip(rho, w_rho):
        u = np.stack([r * a1, r * a2], axis=-1)
        d = wr * r**3 * w_ang * np.exp(gibbs_log_density(g, lam, kappa, beta, u))
        num += np.sum(d * functional(u))
        den += d.sum()
    return complex(num / den)
