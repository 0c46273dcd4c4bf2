"""Gibbs (KMS) states of the truncated Bose-Hubbard system and the
inequalities used to control them.

Hamiltonians that conserve the particle number are diagonalised sector by
sector.  Boltzmann factors are always shifted by the smallest eigenvalue and
only the logarithm of the partition function is stored.  ``exp(+beta H)`` is
never formed: every complex-time expression goes through either
``tr(A exp(-beta H) B)`` or eigenbasis ratios ``exp(-beta (E_j - E_k))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock import (
    CompressedWeyl,
    FockBasis,
    FockOperator,
    ModelParams,
    bose_hubbard_hamiltonian,
    cutoff_values,
    interaction_operator,
    quadratic_hamiltonian,
)
from .graph import Graph

RATIO_CAP = 1e12


class NumericalError(RuntimeError):
    pass


class ConditioningError(NumericalError):
    """Boltzmann ratios too large to evaluate a complex-time expression."""


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Block eigendecomposition; ``blocks[i]`` indexes basis states.

    Eigenvalues ascend within each block.  For number-conserving operators the
    blocks are the particle sectors.
    """

    basis: FockBasis
    blocks: tuple
    values: tuple
    vectors: tuple

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.concatenate(self.values)

    @property
    def sector_aligned(self) -> bool:
        return len(self.blocks) == self.basis.n_max + 1

    def blocks_within(self, dim: int):
        """Blocks lying inside the first ``dim`` basis states."""
        out = [i for i, b in enumerate(self.blocks) if b.stop <= dim]
        if sum(self.blocks[i].stop - self.blocks[i].start for i in out) != dim:
            raise ValueError(f"dimension {dim} does not align with the spectral blocks")
        return out

    def restricted(self, rng: slice):
        """Dense eigenvector matrix and energies on a block-aligned index range."""
        idx = [i for i, b in enumerate(self.blocks) if b.start >= rng.start and b.stop <= rng.stop]
        d = rng.stop - rng.start
        if sum(self.blocks[i].stop - self.blocks[i].start for i in idx) != d:
            raise ValueError(f"range {rng} does not align with the spectral blocks")
        u = np.zeros((d, d), dtype=np.result_type(*[self.vectors[i] for i in idx]))
        for i in idx:
            b = self.blocks[i]
            u[b.start - rng.start : b.stop - rng.start, b.start - rng.start : b.stop - rng.start] = self.vectors[i]
        return u, np.concatenate([self.values[i] for i in idx])

    def reconstruct(self) -> np.ndarray:
        u, e = self.restricted(slice(0, self.basis.dim))
        return (u * e) @ u.conj().T


def conserves_number(op: FockOperator) -> bool:
    t = op.basis.totals
    if op.is_sparse:
        coo = op.matrix.tocoo()
        nz = coo.data != 0
        return bool(np.all(t[coo.row[nz]] == t[coo.col[nz]]))
    rows, cols = np.nonzero(op.toarray())
    return bool(np.all(t[rows] == t[cols]))


def spectral_decomposition(H: FockOperator) -> SpectralDecomposition:
    if not H.hermitian:
        raise ValueError("spectral_decomposition needs an operator flagged hermitian")
    basis = H.basis
    if conserves_number(H):
        blocks = [basis.sector(k) for k in range(basis.n_max + 1)]
    else:
        blocks = [slice(0, basis.dim)]
    values, vectors = [], []
    for b in blocks:
        block = H.matrix[b, b]
        block = block.toarray() if sp.issparse(block) else np.asarray(block)
        if np.isrealobj(block) or not np.any(block.imag):
            block = block.real
        try:
            w, u = np.linalg.eigh(block)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"eigensolve failed on block {b} (size {block.shape[0]}, "
                f"max|entry|={np.abs(block).max():.3e}, finite={np.isfinite(block).all()})"
            ) from exc
        values.append(w)
        vectors.append(u)
    return SpectralDecomposition(basis, tuple(blocks), tuple(values), tuple(vectors))


@dataclass(frozen=True, eq=False)
class GibbsState:
    decomposition: SpectralDecomposition
    beta: float
    weights: tuple
    log_partition: float
    epsilon: float | None = None

    @property
    def basis(self) -> FockBasis:
        return self.decomposition.basis

    def block_weights(self, i: int) -> np.ndarray:
        return self.weights[i]

    def density(self, dim: int | None = None) -> np.ndarray:
        """Dense density matrix restricted to the first ``dim`` states."""
        dim = self.basis.dim if dim is None else dim
        return self.density_on(slice(0, dim))

    def density_on(self, rng: slice) -> np.ndarray:
        dec = self.decomposition
        d = rng.stop - rng.start
        rho = np.zeros((d, d), dtype=np.result_type(*dec.vectors))
        for i, b in enumerate(dec.blocks):
            if b.start >= rng.start and b.stop <= rng.stop:
                u = dec.vectors[i]
                rho[b.start - rng.start : b.stop - rng.start, b.start - rng.start : b.stop - rng.start] = (
                    u * self.weights[i]
                ) @ u.conj().T
        return rho

    def sector_probabilities(self) -> np.ndarray:
        """Probability of each particle-number sector."""
        dec = self.decomposition
        if dec.sector_aligned:
            return np.array([w.sum() for w in self.weights])
        u = dec.vectors[0]
        diag = (np.abs(u) ** 2) @ self.weights[0]
        return np.bincount(self.basis.totals, weights=diag, minlength=self.basis.n_max + 1)

    def truncated(self, n_max: int) -> "GibbsState":
        """Gibbs state of the same Hamiltonian on the prefix basis with cutoff ``n_max``.

        Exact for number-conserving Hamiltonians: the sectors decouple, so the
        smaller-cutoff state is the renormalised restriction.
        """
        sub = self.basis.prefix(n_max)
        dec = self.decomposition
        keep = dec.blocks_within(sub.dim)
        mass = sum(self.weights[i].sum() for i in keep)
        new_dec = SpectralDecomposition(
            sub, tuple(dec.blocks[i] for i in keep), tuple(dec.values[i] for i in keep),
            tuple(dec.vectors[i] for i in keep),
        )
        return GibbsState(new_dec, self.beta, tuple(self.weights[i] / mass for i in keep),
                          float(self.log_partition + np.log(mass)), self.epsilon)

    def tail_weight(self, margin: int = 4) -> float:
        """Probability of total particle number above ``n_max - margin``."""
        p = self.sector_probabilities()
        return float(p[max(0, self.basis.n_max - margin + 1) :].sum())


def gibbs_state(H: FockOperator, beta: float) -> GibbsState:
    """Thermal state exp(-beta H) / tr exp(-beta H)."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    dec = spectral_decomposition(H)
    e_min = min(v.min() for v in dec.values)
    boltz = [np.exp(-beta * (v - e_min)) for v in dec.values]
    z_shift = sum(b.sum() for b in boltz)
    weights = tuple(b / z_shift for b in boltz)
    return GibbsState(dec, beta, weights, float(np.log(z_shift) - beta * e_min), H.epsilon)


def _prefix_check(state: GibbsState, op: FockOperator):
    if not op.basis.is_prefix_of(state.basis):
        raise ValueError(f"operator basis {op.basis!r} is not a prefix of state basis {state.basis!r}")


def expectation(state: GibbsState, A: FockOperator) -> complex:
    """tr(rho A) for an operator on the state's basis or a prefix of it."""
    _prefix_check(state, A)
    dec = state.decomposition
    total = 0.0 + 0.0j
    for i in dec.blocks_within(A.basis.dim):
        b, u = dec.blocks[i], dec.vectors[i]
        blk = A.matrix[b, b]
        blk = blk.toarray() if sp.issparse(blk) else blk
        total += np.sum(state.weights[i] * np.sum(u.conj() * (blk @ u), axis=0))
    return complex(total)


def number_moment(state: GibbsState, basis: FockBasis, epsilon: float, k: int) -> float:
    """tr(rho N_eps^k) from the sector probabilities (N_eps is diagonal)."""
    if basis.dim != state.basis.dim:
        raise ValueError(f"{basis!r} does not match the state basis {state.basis!r}")
    if k < 0:
        raise ValueError(f"moment order must be nonnegative, got {k}")
    levels = epsilon * np.arange(basis.n_max + 1, dtype=float)
    return float(np.sum(state.sector_probabilities() * levels**k))


def _check_model(state: GibbsState, H: FockOperator, *ops: FockOperator):
    if H.basis.dim != state.basis.dim or H.basis.graph_dim != state.basis.graph_dim:
        raise ValueError(f"Hamiltonian basis {H.basis!r} does not match state basis {state.basis!r}")
    for op in ops:
        if not op.basis.is_prefix_of(H.basis):
            raise ValueError(f"operator basis {op.basis!r} is not a prefix of {H.basis!r}")


def kms_pair(state: GibbsState, H: FockOperator, beta: float, A: FockOperator, B: FockOperator,
             method: str = "stable"):
    """Return ``(omega(A alpha(B)), omega(B A))`` with alpha(B) = exp(-beta H) B exp(beta H).

    ``method="stable"`` evaluates the left side as tr(A exp(-beta H) B)/Z;
    ``method="eigenbasis"`` forms alpha(B) through Boltzmann ratios in the
    eigenbasis of H.  A and B may live on a prefix of the state's basis
    (sector-aligned), which is exact because exp(-beta H) preserves sectors.
    """
    _check_model(state, H, A, B)
    if A.basis.dim != B.basis.dim:
        raise ValueError("A and B live on different bases")
    d = A.basis.dim
    a, b = A.toarray(), B.toarray()
    rho = state.density(d)
    rhs = np.sum((rho @ b) * a.T)
    if method == "stable":
        if not np.isclose(beta, state.beta, rtol=1e-14, atol=0):
            raise ValueError(f"stable form needs beta equal to the state's ({state.beta}), got {beta}")
        lhs = np.sum((a @ rho) * b.T)
    elif method == "eigenbasis":
        u, e = state.decomposition.restricted(slice(0, d))
        bt = u.conj().T @ b @ u
        alpha_b = u @ (bt * _ratio_matrix(beta, bt, e, RATIO_CAP)) @ u.conj().T
        lhs = np.sum((rho @ a) * alpha_b.T)
    else:
        raise ValueError(f"unknown method {method!r}")
    return complex(lhs), complex(rhs)


def _ratio_matrix(beta: float, bt: np.ndarray, energies: np.ndarray, ratio_cap: float):
    """exp(-beta (E_j - E_k)) on the entries where ``bt`` is non-negligible."""
    expo = -beta * (energies[:, None] - energies[None, :])
    scale = np.abs(bt).max() if bt.size else 0.0
    active = np.abs(bt) > 1e-13 * scale if scale > 0 else np.zeros(bt.shape, bool)
    if active.any() and expo[active].max() > np.log(ratio_cap):
        worst = float(np.exp(min(expo[active].max(), 700)))
        raise ConditioningError(
            f"Boltzmann ratio {worst:.3e} exceeds cap {ratio_cap:.1e}; "
            "use a smaller cutoff scale m or a larger n_max"
        )
    return np.exp(np.where(active, expo, 0.0))


def complex_time_difference(
    state: GibbsState, H: FockOperator, beta: float, B: FockOperator, epsilon: float,
    ratio_cap: float = RATIO_CAP,
) -> FockOperator:
    """(alpha_{i eps beta}(B) - B) / (i eps) via eigenbasis Boltzmann ratios.

    Entries become ``Bt_jk (exp(-beta (E_j - E_k)) - 1) / (i eps)`` in the
    eigenbasis of H.  A :class:`ConditioningError` is raised if an entry
    needs a ratio above ``ratio_cap``.  B may live on a sector-aligned prefix.
    """
    _check_model(state, H, B)
    d = B.basis.dim
    u, e = state.decomposition.restricted(slice(0, d))
    bt = u.conj().T @ B.toarray() @ u
    r = _ratio_matrix(beta, bt, e, ratio_cap)
    out = u @ (bt * (r - 1.0)) @ u.conj().T / (1j * epsilon)
    return FockOperator(B.basis, out, epsilon)


def _expm_herm(a: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(a)
    return (u * np.exp(w)) @ u.conj().T


def golden_thompson_check(A, B):
    """Return ``(tr exp(A + B), tr(exp(A) exp(B)))`` for Hermitian A, B."""
    a = A.toarray() if isinstance(A, FockOperator) else np.asarray(A)
    b = B.toarray() if isinstance(B, FockOperator) else np.asarray(B)
    lhs = float(np.sum(np.exp(np.linalg.eigvalsh(a + b))))
    rhs = np.sum(_expm_herm(a) * _expm_herm(b).T)
    return lhs, float(rhs.real)


def quasi_free_state(basis: FockBasis, g: Graph, epsilon: float, beta: float, kappa: float) -> GibbsState:
    """Gibbs state of eps dGamma(-Laplacian - kappa) at inverse temperature beta."""
    return gibbs_state(quadratic_hamiltonian(basis, g, epsilon, kappa), beta)


def bogoliubov_check(basis: FockBasis, g: Graph, params: ModelParams):
    """Both sides of the Bogoliubov bound comparing H_eps with its quadratic part.

    lhs = ln tr exp(-beta eps dGamma(-Lap - kappa)) - ln tr exp(-beta H_eps)
    rhs = beta * eps^2 lam/2 * omega0(I_G)
    """
    H = bose_hubbard_hamiltonian(basis, params, g)
    full = gibbs_state(H, params.beta)
    free = quasi_free_state(basis, g, params.epsilon, params.beta, params.kappa)
    inter = expectation(free, interaction_operator(basis)).real
    lhs = free.log_partition - full.log_partition
    rhs = params.beta * params.epsilon**2 * params.lam / 2 * inter
    return float(lhs), float(rhs)


def partition_ratio(basis: FockBasis, g: Graph, params: ModelParams) -> float:
    """tr exp(-beta H0) / tr exp(-beta H_eps) with H0 the quadratic part."""
    H = bose_hubbard_hamiltonian(basis, params, g)
    free = quasi_free_state(basis, g, params.epsilon, params.beta, params.kappa)
    return float(np.exp(free.log_partition - gibbs_state(H, params.beta).log_partition))


def model_state(g: Graph, params: ModelParams, n_max: int):
    """Basis, Hamiltonian and Gibbs state for one truncation."""
    basis = FockBasis(g.vertex_count, n_max)
    H = bose_hubbard_hamiltonian(basis, params, g)
    return basis, H, gibbs_state(H, params.beta)


def saturation_change(state: GibbsState, n_max: int) -> float:
    """Relative change of log Z between cutoff ``n_max`` and the state's own cutoff."""
    lz = state.truncated(n_max).log_partition
    return float(abs(state.log_partition - lz) / max(abs(lz), 1e-300))


def saturation_check(g: Graph, params: ModelParams, n_max: int, extra: int = 4, tol: float = 1e-8):
    """Relative change of log Z when the cutoff grows by ``extra``.

    Returns ``(ok, relative_change)``.
    """
    rel = saturation_change(model_state(g, params, n_max + extra)[2], n_max)
    return rel <= tol, rel


def random_bounded_operator(basis: FockBasis, epsilon: float, rng: np.random.Generator,
                            terms: int = 3) -> FockOperator:
    """Seeded random combination sum_j c_j chi(N/s_j) W(f_j) chi(N/s_j).

    Frequencies are standard complex normal, cutoff scales uniform in
    [0.5, 1.5] times eps n_max.
    """
    m = np.zeros((basis.dim, basis.dim), dtype=complex)
    idx = np.arange(basis.dim)
    for _ in range(terms):
        f = rng.normal(size=basis.graph_dim) + 1j * rng.normal(size=basis.graph_dim)
        c = complex(rng.normal(), rng.normal())
        s = epsilon * max(basis.n_max, 1) * rng.uniform(0.5, 1.5)
        chi = cutoff_values(basis, epsilon, s)
        m += c * chi[:, None] * CompressedWeyl(basis, f, epsilon).block(idx, idx) * chi[None, :]
    return FockOperator(basis, m, epsilon)
