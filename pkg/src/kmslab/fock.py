"""Truncated bosonic Fock space over l^2(G).

States are occupation vectors with total particle number at most ``n_max``,
ordered by total number and then lexicographically.  Because of this order a
basis with a smaller cutoff is a prefix of a larger one, which the thermal and
harness code rely on to restrict operators to low-particle sectors.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph, one_body_operator

DIMENSION_CAP = 200_000
EPS_BAR = 1.0


class DimensionError(RuntimeError):
    """Requested truncation would exceed the configured dimension cap."""


class TruncationWarning(UserWarning):
    pass


def fock_dimension(graph_dim: int, n_max: int) -> int:
    return math.comb(n_max + graph_dim, graph_dim)


def _compositions(k: int, parts: int):
    if parts == 1:
        yield (k,)
        return
    for i in range(k + 1):
        for rest in _compositions(k - i, parts - 1):
            yield (i,) + rest


class FockBasis:
    """Occupation-number basis with a total-particle cutoff."""

    def __init__(self, graph_dim: int, n_max: int, cap: int = DIMENSION_CAP):
        if graph_dim < 1 or n_max < 0:
            raise ValueError(f"need graph_dim >= 1 and n_max >= 0, got {graph_dim}, {n_max}")
        dim = fock_dimension(graph_dim, n_max)
        if dim > cap:
            raise DimensionError(
                f"Fock dimension C({n_max}+{graph_dim},{graph_dim}) = {dim} exceeds cap {cap}"
            )
        self.graph_dim = graph_dim
        self.n_max = n_max
        states = [c for k in range(n_max + 1) for c in _compositions(k, graph_dim)]
        self.states = np.array(states, dtype=np.int64).reshape(dim, graph_dim)
        self.states.setflags(write=False)
        self.totals = self.states.sum(axis=1)
        self.totals.setflags(write=False)
        counts = [math.comb(k + graph_dim - 1, graph_dim - 1) for k in range(n_max + 1)]
        self.offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self._codes = self._encode(self.states)
        self._order = np.argsort(self._codes)

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"FockBasis(graph_dim={self.graph_dim}, n_max={self.n_max}, dim={self.dim})"

    def sector(self, k: int) -> slice:
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))

    def _encode(self, states):
        base = self.n_max + 1
        return (states * base ** np.arange(self.graph_dim, dtype=np.int64)).sum(axis=-1)

    def lookup(self, states) -> np.ndarray:
        """Indices of the given occupation vectors (-1 where not in the basis)."""
        states = np.atleast_2d(np.asarray(states, dtype=np.int64))
        valid = (states >= 0).all(axis=1) & (states.sum(axis=1) <= self.n_max)
        codes = self._encode(np.where(valid[:, None], states, 0))
        pos = np.searchsorted(self._codes, codes, sorter=self._order)
        pos = np.clip(pos, 0, self.dim - 1)
        idx = self._order[pos]
        return np.where(valid & (self._codes[idx] == codes), idx, -1)

    def index(self, state) -> int:
        i = int(self.lookup([state])[0])
        if i < 0:
            raise KeyError(f"state {tuple(state)} not in {self!r}")
        return i

    def prefix(self, n_max: int) -> "FockBasis":
        if n_max > self.n_max:
            raise ValueError("prefix cutoff exceeds basis cutoff")
        return FockBasis(self.graph_dim, n_max)

    def is_prefix_of(self, other: "FockBasis") -> bool:
        return self.graph_dim == other.graph_dim and self.n_max <= other.n_max

    def chunks(self, target: int = 600) -> list[slice]:
        """Split into contiguous index ranges aligned with particle sectors."""
        out, start = [], 0
        for k in range(self.n_max + 1):
            stop = int(self.offsets[k + 1])
            if stop - start >= target or k == self.n_max:
                out.append(slice(start, stop))
                start = stop
        return out


def build_basis(graph_dim: int, n_max: int, cap: int = DIMENSION_CAP) -> FockBasis:
    """Basis with total-particle cutoff ``n_max >= 1``."""
    if n_max < 1:
        raise ValueError(f"n_max must be at least 1, got {n_max}")
    return FockBasis(graph_dim, n_max, cap)


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Matrix over a :class:`FockBasis` (dense ndarray or scipy sparse)."""

    basis: FockBasis
    matrix: object
    epsilon: float | None = None
    hermitian: bool = False

    def __post_init__(self):
        if self.matrix.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {self.basis!r}")
        if self.hermitian:
            diff = self.matrix - self.matrix.conj().T
            err = abs(diff).max() if diff.size else 0.0
            if err > 1e-12:
                raise ValueError(f"operator flagged hermitian but |M - M^H|_max = {err:.3e}")

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.basis, self.matrix.conj().T, self.epsilon, self.hermitian)

    def restrict(self, sub: FockBasis) -> "FockOperator":
        """Compress onto a prefix basis (same vertex count, smaller cutoff)."""
        if not sub.is_prefix_of(self.basis):
            raise ValueError(f"{sub!r} is not a prefix of {self.basis!r}")
        d = sub.dim
        return FockOperator(sub, self.matrix[:d, :d], self.epsilon, self.hermitian)

    def _combine(self, other, op):
        if isinstance(other, FockOperator):
            if other.basis.dim != self.basis.dim or other.basis.graph_dim != self.basis.graph_dim:
                raise ValueError("operators live on different bases")
            herm = self.hermitian and other.hermitian and op in ("add", "sub")
            eps = self.epsilon if self.epsilon == other.epsilon else None
            a, b = self.matrix, other.matrix
            m = {"add": lambda: a + b, "sub": lambda: a - b, "mul": lambda: a @ b}[op]()
            return FockOperator(self.basis, m, eps, herm)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, "add")

    def __sub__(self, other):
        return self._combine(other, "sub")

    def __matmul__(self, other):
        return self._combine(other, "mul")

    def __mul__(self, c):
        if np.ndim(c) != 0:
            return NotImplemented
        herm = self.hermitian and np.isreal(c)
        return FockOperator(self.basis, self.matrix * c, self.epsilon, bool(herm))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def commutator(self, other: "FockOperator") -> "FockOperator":
        return (self @ other) - (other @ self)


@dataclass(frozen=True)
class ModelParams:
    epsilon: float
    beta: float
    lam: float
    kappa: float
    eps_bar: float = EPS_BAR

    def __post_init__(self):
        if not 0 < self.epsilon < self.eps_bar:
            raise ValueError(f"epsilon must lie in (0, {self.eps_bar}), got {self.epsilon}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.lam > 0:
            raise ValueError(f"on-site interaction lambda must be positive, got {self.lam}")
        if not self.kappa < 0:
            raise ValueError(
                f"chemical potential kappa must be negative (finite partition function), got {self.kappa}"
            )


def _check_vertex(basis: FockBasis, x: int):
    if not 0 <= x < basis.graph_dim:
        raise ValueError(f"vertex {x} out of range for graph_dim {basis.graph_dim}")


def annihilation(basis: FockBasis, x: int) -> FockOperator:
    _check_vertex(basis, x)
    src = np.nonzero(basis.states[:, x] > 0)[0]
    targets = basis.states[src].copy()
    targets[:, x] -= 1
    dst = basis.lookup(targets)
    vals = np.sqrt(basis.states[src, x].astype(float))
    m = sp.csr_matrix((vals, (dst, src)), shape=(basis.dim, basis.dim))
    return FockOperator(basis, m)


def creation(basis: FockBasis, x: int) -> FockOperator:
    return annihilation(basis, x).adjoint()


def _ladders(basis):
    a = [annihilation(basis, x).matrix for x in range(basis.graph_dim)]
    return a, [m.T.tocsr() for m in a]


def second_quantization(basis: FockBasis, A) -> FockOperator:
    """dGamma(A) = sum_{x,y} A[x,y] a*_x a_y."""
    A = np.asarray(A)
    if A.shape != (basis.graph_dim, basis.graph_dim):
        raise ValueError(f"one-body operator shape {A.shape} does not match graph_dim {basis.graph_dim}")
    a, ad = _ladders(basis)
    m = sp.csr_matrix((basis.dim, basis.dim), dtype=A.dtype)
    for x in range(basis.graph_dim):
        for y in range(basis.graph_dim):
            if A[x, y] != 0:
                m = m + A[x, y] * (ad[x] @ a[y])
    herm = bool(np.allclose(A, A.conj().T, atol=1e-13, rtol=0))
    return FockOperator(basis, m.tocsr(), None, herm)


def number_operator(basis: FockBasis, epsilon: float) -> FockOperator:
    """Rescaled number operator epsilon * sum_x a*_x a_x (diagonal)."""
    return FockOperator(basis, sp.diags(epsilon * basis.totals.astype(float)).tocsr(), epsilon, True)


def interaction_operator(basis: FockBasis) -> FockOperator:
    """I_G = sum_x a*_x a*_x a_x a_x, diagonal with entries sum_x n_x (n_x - 1)."""
    n = basis.states
    return FockOperator(basis, sp.diags((n * (n - 1)).sum(axis=1).astype(float)).tocsr(), None, True)


def bose_hubbard_hamiltonian(basis: FockBasis, params: ModelParams, g: Graph) -> FockOperator:
    """Assemble H_eps term by term from ladder operators.

    Hopping is written as (eps/2) sum over ordered neighbour pairs of
    (a*_x - a*_y)(a_x - a_y); the second-quantized form is left to
    :func:`second_quantization` so the two can be compared.
    """
    if basis.graph_dim != g.vertex_count:
        raise ValueError(f"basis has {basis.graph_dim} modes but graph has {g.vertex_count} vertices")
    eps, lam, kappa = params.epsilon, params.lam, params.kappa
    a, ad = _ladders(basis)
    dim = basis.dim
    hop = sp.csr_matrix((dim, dim))
    for i, j in g.edges:
        for x, y in ((i, j), (j, i)):
            hop = hop + (ad[x] - ad[y]) @ (a[x] - a[y])
    inter = sp.csr_matrix((dim, dim))
    num = sp.csr_matrix((dim, dim))
    for x in range(basis.graph_dim):
        inter = inter + ad[x] @ ad[x] @ a[x] @ a[x]
        num = num + ad[x] @ a[x]
    h = 0.5 * eps * hop + 0.5 * eps**2 * lam * inter - eps * kappa * num
    return FockOperator(basis, h.tocsr(), eps, True)


def field_operator(basis: FockBasis, f, epsilon: float | None = None) -> FockOperator:
    """Phi(f) = (a*(f) + a(f)) / sqrt(2) with a*(f) = sum_x f_x a*_x."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (basis.graph_dim,):
        raise ValueError(f"f must have length {basis.graph_dim}")
    a, ad = _ladders(basis)
    m = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for x in range(basis.graph_dim):
        if f[x] != 0:
            m = m + f[x] * ad[x] + np.conj(f[x]) * a[x]
    return FockOperator(basis, (m / np.sqrt(2)).tocsr(), epsilon, True)


def _mode_weyl(coeff: complex, epsilon: float, size: int) -> np.ndarray:
    """exp(i sqrt(eps) (c a* + conj(c) a)/sqrt 2) on a single mode of given size."""
    off = np.sqrt(np.arange(1, size))
    phi = (np.diag(coeff * off, -1) + np.diag(np.conj(coeff) * off, 1)) / np.sqrt(2)
    w, u = np.linalg.eigh(phi)
    return (u * np.exp(1j * np.sqrt(epsilon) * w)) @ u.conj().T


class CompressedWeyl:
    """Matrix elements of the untruncated Weyl operator between basis states.

    Modes commute, so W(f) is the product of single-mode factors; each factor
    is exponentiated on a padded single-mode space and only the block inside
    the cutoff is kept.  Blocks of the multi-mode matrix are assembled on
    demand, which keeps memory bounded for large bases.
    """

    def __init__(self, basis: FockBasis, f, epsilon: float, pad: int | None = None):
        f = np.asarray(f, dtype=complex)
        if f.shape != (basis.graph_dim,):
            raise ValueError(f"f must have length {basis.graph_dim}")
        self.basis, self.f, self.epsilon = basis, f, epsilon
        size = basis.n_max + 1 + (pad if pad is not None else basis.n_max + 40)
        keep = basis.n_max + 1
        self.factors = [
            None if f[x] == 0 else _mode_weyl(f[x], epsilon, size)[:keep, :keep]
            for x in range(basis.graph_dim)
        ]

    def block(self, rows, cols) -> np.ndarray:
        s = self.basis.states
        r, c = s[rows], s[cols]
        out = np.ones((len(r), len(c)), dtype=complex)
        for x, fac in enumerate(self.factors):
            if fac is None:
                out *= r[:, x][:, None] == c[:, x][None, :]
            else:
                out *= fac[np.ix_(r[:, x], c[:, x])]
        return out

    def dense(self) -> np.ndarray:
        idx = np.arange(self.basis.dim)
        return self.block(idx, idx)


def weyl_operator(
    basis: FockBasis,
    f,
    epsilon: float,
    method: str = "eig",
    leak_tol: float = 1e-8,
) -> FockOperator:
    """W(f) = exp(i sqrt(eps) Phi(f)).

    ``method="eig"`` exponentiates the truncated field operator through its
    eigendecomposition (exactly unitary on the truncated space).
    ``method="projected"`` returns the compression of the untruncated Weyl
    operator (exact matrix elements, not unitary near the cutoff).  Leakage
    ``|W^H W - 1|`` on the states with total <= n_max/2 above ``leak_tol``
    raises a :class:`TruncationWarning`.
    """
    if method == "eig":
        phi = field_operator(basis, f, epsilon).toarray()
        w, u = np.linalg.eigh(phi)
        m = (u * np.exp(1j * np.sqrt(epsilon) * w)) @ u.conj().T
    elif method == "projected":
        m = CompressedWeyl(basis, f, epsilon).dense()
    else:
        raise ValueError(f"unknown Weyl method {method!r}")
    leak = weyl_leakage(basis, m)
    if leak > leak_tol:
        warnings.warn(
            f"Weyl operator leaks {leak:.2e} out of the protected subspace (n_max={basis.n_max})",
            TruncationWarning,
            stacklevel=2,
        )
    return FockOperator(basis, m, epsilon)


def weyl_leakage(basis: FockBasis, m: np.ndarray) -> float:
    d = int(basis.offsets[basis.n_max // 2 + 1])
    cols = m[:, :d]
    gram = cols.conj().T @ cols - np.eye(d)
    return float(np.linalg.norm(gram, 2)) if d <= 1500 else float(np.linalg.norm(gram))


def _bump(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    out = np.zeros_like(t)
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _bump_prime(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    out = np.zeros_like(t)
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


class CutoffProfile:
    """Smooth even cutoff: 1 on |x| <= 1/2, 0 on |x| >= 1, values in [0, 1].

    Built from the standard bridge B(t) = s(t) / (s(t) + s(1 - t)) with
    s(t) = exp(-1/t), evaluated at t = 2 (1 - |x|).
    """

    def __call__(self, x):
        t = 2.0 * (1.0 - np.abs(np.asarray(x, dtype=float)))
        a, b = _bump(t), _bump(1.0 - t)
        return a / (a + b)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        t = 2.0 * (1.0 - np.abs(x))
        a, b = _bump(t), _bump(1.0 - t)
        da, db = _bump_prime(t), _bump_prime(1.0 - t)
        dbridge = (da * b + a * db) / (a + b) ** 2
        return -2.0 * np.sign(x) * dbridge

    def scaled(self, x, n_scale: float):
        return self(np.asarray(x) / n_scale)

    def scaled_derivative(self, x, n_scale: float):
        return self.derivative(np.asarray(x) / n_scale) / n_scale


MOLLIFIER = CutoffProfile()


def cutoff_values(basis: FockBasis, epsilon: float, n_scale: float, chi: CutoffProfile = MOLLIFIER):
    if not n_scale > 0:
        raise ValueError(f"n_scale must be positive, got {n_scale}")
    return chi.scaled(epsilon * basis.totals, n_scale)


def cutoff_operator(
    basis: FockBasis, epsilon: float, n_scale: float, chi: CutoffProfile = MOLLIFIER
) -> FockOperator:
    """chi(N_eps / n_scale) as a diagonal operator."""
    return FockOperator(basis, sp.diags(cutoff_values(basis, epsilon, n_scale, chi)).tocsr(), epsilon, True)


def support_cutoff(epsilon: float, n_scale: float) -> int:
    """Largest particle number whose cutoff value can be non-zero."""
    return max(0, math.ceil(n_scale / epsilon) - 1)


def quadratic_hamiltonian(basis: FockBasis, g: Graph, epsilon: float, kappa: float) -> FockOperator:
    """eps * dGamma(-Laplacian - kappa), the non-interacting part of H_eps."""
    op = second_quantization(basis, one_body_operator(g, kappa))
    return FockOperator(basis, epsilon * op.matrix, epsilon, True)


def decomposed_hamiltonian(basis: FockBasis, params: ModelParams, g: Graph) -> FockOperator:
    """H_eps rebuilt as eps dGamma(-Lap - kappa) + eps^2 lam/2 I_G."""
    kin = quadratic_hamiltonian(basis, g, params.epsilon, params.kappa)
    inter = interaction_operator(basis)
    m = kin.matrix + 0.5 * params.epsilon**2 * params.lam * inter.matrix
    return FockOperator(basis, m.tocsr(), params.epsilon, True)


__all__ = [
    "CompressedWeyl",
    "CutoffProfile",
    "DimensionError",
    "FockBasis",
    "FockOperator",
    "MOLLIFIER",
    "ModelParams",
    "TruncationWarning",
    "annihilation",
    "bose_hubbard_hamiltonian",
    "build_basis",
    "creation",
    "cutoff_operator",
    "cutoff_values",
    "decomposed_hamiltonian",
    "field_operator",
    "fock_dimension",
    "interaction_operator",
    "number_operator",
    "quadratic_hamiltonian",
    "second_quantization",
    "support_cutoff",
    "weyl_leakage",
    "weyl_operator",
]
