import itertools
import math
import warnings

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from kmslab.fock import (
    MOLLIFIER,
    CompressedWeyl,
    DimensionError,
    FockBasis,
    FockOperator,
    ModelParams,
    TruncationWarning,
    annihilation,
    bose_hubbard_hamiltonian,
    build_basis,
    creation,
    cutoff_operator,
    cutoff_values,
    decomposed_hamiltonian,
    field_operator,
    fock_dimension,
    interaction_operator,
    number_operator,
    second_quantization,
    support_cutoff,
    weyl_leakage,
    weyl_operator,
)
from kmslab.graph import complete, laplacian, one_body_operator, path


def protected(basis, margin):
    return np.nonzero(basis.totals <= basis.n_max - margin)[0]


# basis

def test_basis_examples():
    b = build_basis(1, 2)
    assert b.states.tolist() == [[0], [1], [2]]
    assert build_basis(2, 2).dim == 6
    assert build_basis(3, 30).dim == 5456 == math.comb(33, 3)
    with pytest.raises(ValueError):
        build_basis(2, 0)


@pytest.mark.parametrize("V,n", [(1, 5), (2, 7), (3, 4), (4, 3)])
def test_basis_order_and_index_bijection(V, n):
    b = FockBasis(V, n)
    assert b.dim == fock_dimension(V, n) == math.comb(n + V, V)
    keys = [(int(t), tuple(s)) for t, s in zip(b.totals, b.states)]
    assert keys == sorted(keys)
    assert np.array_equal(b.lookup(b.states), np.arange(b.dim))
    assert all(b.index(s) == i for i, s in enumerate(b.states))
    assert b.lookup([[n + 1] + [0] * (V - 1)])[0] == -1
    for k in range(n + 1):
        assert np.all(b.totals[b.sector(k)] == k)


def test_prefix_structure():
    big, small = FockBasis(2, 9), FockBasis(2, 4)
    assert small.is_prefix_of(big)
    assert np.array_equal(big.states[: small.dim], small.states)
    chunks = big.chunks(target=10)
    assert chunks[0].start == 0 and chunks[-1].stop == big.dim
    assert all(c.start in big.offsets for c in chunks)


def test_dimension_cap():
    with pytest.raises(DimensionError):
        FockBasis(3, 200)
    with pytest.raises(DimensionError):
        FockBasis(2, 20, cap=100)


# ladder operators

def test_annihilation_example():
    a = annihilation(build_basis(1, 2), 0).toarray()
    assert np.allclose(a, [[0, 1, 0], [0, 0, np.sqrt(2)], [0, 0, 0]])


def test_ladder_properties():
    b = FockBasis(3, 4)
    for x in range(3):
        a, ad = annihilation(b, x), creation(b, x)
        assert np.array_equal(ad.toarray(), a.toarray().conj().T)
        assert np.allclose(np.diag((ad @ a).toarray()), b.states[:, x])
        assert np.allclose(a.toarray()[:, 0], 0)
        top = b.totals == b.n_max
        assert np.allclose(ad.toarray()[:, top], 0)


def test_projected_ccr():
    b = FockBasis(3, 5)
    P = protected(b, 1)
    for x, y in itertools.product(range(3), repeat=2):
        a, ady = annihilation(b, x).toarray(), creation(b, y).toarray()
        comm = a @ ady - ady @ a
        expect = np.eye(b.dim) * (x == y)
        # sqrt(n) * sqrt(n) is exact only up to one rounding
        assert np.abs(comm[np.ix_(P, P)] - expect[np.ix_(P, P)]).max() <= 4 * np.finfo(float).eps


# second quantization against the symmetrised tensor product

def _symmetric_vector(state, V):
    """Normalised symmetric tensor for an occupation vector."""
    modes = [x for x in range(V) for _ in range(state[x])]
    n = len(modes)
    vec = np.zeros(V**n)
    for perm in set(itertools.permutations(modes)):
        idx = 0
        for m in perm:
            idx = idx * V + m
        vec[idx] = 1.0
    return vec / np.linalg.norm(vec)


def _dgamma_tensor(A, n):
    V = A.shape[0]
    out = np.zeros((V**n, V**n), dtype=complex)
    for j in range(n):
        ops = [np.eye(V)] * n
        ops[j] = A
        term = ops[0]
        for o in ops[1:]:
            term = np.kron(term, o)
        out += term
    return out


@pytest.mark.parametrize("V,n", [(2, 2), (2, 3), (3, 2)])
def test_second_quantization_matches_tensor_oracle(V, n):
    rng = np.random.default_rng(V * 10 + n)
    A = rng.normal(size=(V, V)) + 1j * rng.normal(size=(V, V))
    b = FockBasis(V, n)
    sec = b.sector(n)
    S = np.array([_symmetric_vector(s, V) for s in b.states[sec]]).T
    oracle = S.T @ _dgamma_tensor(A, n) @ S
    assert np.allclose(second_quantization(b, A).toarray()[sec, sec], oracle, atol=1e-12)


def test_second_quantization_examples():
    b = FockBasis(3, 4)
    assert np.allclose(second_quantization(b, np.eye(3)).toarray(), np.diag(b.totals))
    A = one_body_operator(complete(3), -0.7)
    m = second_quantization(b, A)
    assert m.hermitian
    assert np.allclose(m.toarray()[b.sector(1), b.sector(1)], A[::-1, ::-1])
    # block diagonal across sectors
    t = b.totals
    dense = m.toarray()
    assert np.all(dense[t[:, None] != t[None, :]] == 0)
    # P2 Laplacian two-particle block: 3x3 from the tensor oracle
    b2 = FockBasis(2, 2)
    mat = second_quantization(b2, -laplacian(path(2))).toarray()[b2.sector(2), b2.sector(2)]
    assert mat.shape == (3, 3)
    assert np.isclose(np.trace(mat), 2 * np.trace(-laplacian(path(2))) * 3 / 2)
    with pytest.raises(ValueError):
        second_quantization(b, np.eye(2))


# diagonal operators

def test_number_operator():
    b = FockBasis(3, 5)
    n1 = number_operator(b, 1.0).toarray()
    assert n1[b.index([1, 2, 0]), b.index([1, 2, 0])] == 3
    assert number_operator(b, 0.1).toarray()[0, 0] == 0
    vals, counts = np.unique(np.round(np.diag(number_operator(b, 0.1).toarray()), 12), return_counts=True)
    assert np.allclose(vals, 0.1 * np.arange(6))
    assert counts.tolist() == [math.comb(k + 2, 2) for k in range(6)]


def test_interaction_operator_examples():
    b = FockBasis(2, 5)
    I = interaction_operator(b).toarray()
    assert I[b.index([3, 2]), b.index([3, 2])] == 8
    assert FockBasis(1, 2) and interaction_operator(FockBasis(1, 2)).toarray()[2, 2] == 2
    hard_core = [b.index(s) for s in ([0, 0], [1, 0], [0, 1], [1, 1])]
    assert np.all(np.diag(I)[hard_core] == 0)
    ladders = sum(
        (creation(b, x) @ creation(b, x) @ annihilation(b, x) @ annihilation(b, x)).toarray() for x in range(2)
    )
    assert np.allclose(ladders, I)


# Hamiltonian

PARAMS = ModelParams(0.3, 1.0, 0.7, -0.5)


def test_model_params_validation():
    for bad in [(0.0, 1, 1, -1), (1.0, 1, 1, -1), (0.1, 0, 1, -1), (0.1, 1, 0, -1), (0.1, 1, 1, 0.5)]:
        with pytest.raises(ValueError):
            ModelParams(*bad)
    assert ModelParams(1.0, 1, 1, -1, eps_bar=2.0).epsilon == 1.0


@pytest.mark.parametrize("g", [path(1), path(2), path(3), complete(3)])
def test_hamiltonian_properties(g):
    b = FockBasis(g.vertex_count, 5)
    H = bose_hubbard_hamiltonian(b, PARAMS, g)
    h = H.toarray()
    assert H.hermitian
    assert np.abs(h - decomposed_hamiltonian(b, PARAMS, g).toarray()).max() <= 1e-10
    N = number_operator(b, PARAMS.epsilon).toarray()
    assert np.abs(h @ N - N @ h).max() == 0
    assert np.linalg.eigvalsh(h).min() >= -1e-10
    assert h[0, 0] == 0


def test_hamiltonian_one_site_diagonal():
    b = FockBasis(1, 8)
    eps, lam, kappa = PARAMS.epsilon, PARAMS.lam, PARAMS.kappa
    n = np.arange(9)
    expect = -eps * kappa * n + eps**2 * lam / 2 * n * (n - 1)
    assert np.allclose(bose_hubbard_hamiltonian(b, PARAMS, path(1)).toarray(), np.diag(expect))


def test_hamiltonian_p2_one_particle_block():
    b = FockBasis(2, 2)
    H = bose_hubbard_hamiltonian(b, ModelParams(1.0, 1.0, 1.0, -1.0, eps_bar=2.0), path(2)).toarray()
    assert np.allclose(np.linalg.eigvalsh(H[b.sector(1), b.sector(1)]), [1, 3])
    with pytest.raises(ValueError):
        bose_hubbard_hamiltonian(b, PARAMS, path(3))


# field and Weyl operators

def test_field_operator():
    b = FockBasis(2, 6)
    assert np.count_nonzero(field_operator(b, [0, 0]).toarray()) == 0
    f = np.array([0.7 - 0.2j, 1.1j])
    phi = field_operator(b, f).toarray()
    assert np.isclose((phi @ phi)[0, 0], np.vdot(f, f).real / 2)
    comm = phi @ field_operator(b, 1j * f).toarray() - field_operator(b, 1j * f).toarray() @ phi
    P = protected(b, 2)
    assert np.allclose(comm[np.ix_(P, P)], 1j * np.vdot(f, f).real * np.eye(len(P)), atol=1e-12)


def test_weyl_identity_and_vacuum():
    b = FockBasis(1, 40)
    assert np.allclose(weyl_operator(b, [0], 0.1).toarray(), np.eye(b.dim))
    for f, eps in [(1.0, 0.1), (0.5 + 1j, 0.3)]:
        w = weyl_operator(b, [f], eps).toarray()
        dense = scipy.linalg.expm(1j * np.sqrt(eps) * field_operator(b, [f]).toarray())
        assert np.isclose(w[0, 0], np.exp(-eps * abs(f) ** 2 / 4), atol=1e-12)
        assert np.allclose(w, dense, atol=1e-10)
        proj = weyl_operator(b, [f], eps, method="projected").toarray()
        assert np.isclose(proj[0, 0], np.exp(-eps * abs(f) ** 2 / 4), atol=1e-14)


def _weyl_relation_error(b, f, g, eps, method):
    wf = weyl_operator(b, f, eps, method=method).toarray()
    wg = weyl_operator(b, g, eps, method=method).toarray()
    wfg = weyl_operator(b, f + g, eps, method=method).toarray()
    phase = np.exp(-0.5j * eps * np.vdot(f, g).imag)
    P = protected(b, b.n_max // 2 + 1)
    return np.abs((wf @ wg - phase * wfg)[np.ix_(P, P)]).max()


@pytest.mark.parametrize("method", ["eig", "projected"])
def test_weyl_relation_on_protected_subspace(method):
    b = FockBasis(2, 40)
    f, g = np.array([1.0, 0.5j]), np.array([0.3j, -0.8])
    assert _weyl_relation_error(b, f, g, 0.1, method) <= 1e-8


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-1.5, 1.5), min_size=4, max_size=4), st.sampled_from([0.05, 0.1, 0.2]))
def test_weyl_relation_property(c, eps):
    b = FockBasis(1, 60)
    f, g = np.array([c[0] + 1j * c[1]]), np.array([c[2] + 1j * c[3]])
    assert _weyl_relation_error(b, f, g, eps, "projected") <= 1e-8


def test_projected_weyl_matches_large_truncation():
    small, big = FockBasis(2, 10), FockBasis(2, 60)
    f = np.array([0.8, -0.4 + 0.6j])
    w_big = weyl_operator(big, f, 0.2, method="eig").toarray()
    cw = CompressedWeyl(small, f, 0.2)
    assert np.allclose(cw.dense(), w_big[: small.dim, : small.dim], atol=1e-12)
    idx = np.arange(small.dim)
    assert np.array_equal(cw.block(idx[:7], idx[3:]), cw.dense()[:7, 3:])


def test_weyl_leakage_warning():
    b = FockBasis(1, 6)
    with pytest.warns(TruncationWarning):
        weyl_operator(b, [3.0], 0.5, method="projected")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        weyl_operator(FockBasis(1, 80), [1.0], 0.1)
    assert weyl_leakage(FockBasis(1, 80), weyl_operator(FockBasis(1, 80), [1.0], 0.1).toarray()) < 1e-8


# cutoffs

def test_cutoff_profile():
    x = np.linspace(-1.5, 1.5, 3001)
    v = MOLLIFIER(x)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(v[np.abs(x) <= 0.5] == 1) and np.all(v[np.abs(x) >= 1] == 0)
    assert np.allclose(v, v[::-1])
    h = 1e-6
    inner = x[(np.abs(x) > 0.01) & (np.abs(x) < 1.49)]
    fd = (MOLLIFIER(inner + h) - MOLLIFIER(inner - h)) / (2 * h)
    assert np.allclose(MOLLIFIER.derivative(inner), fd, atol=1e-6)


def test_cutoff_operator():
    b = FockBasis(2, 30)
    eps = 0.1
    assert np.array_equal(cutoff_operator(b, eps, 2 * eps * b.n_max).toarray(), np.eye(b.dim))
    chi = cutoff_values(b, eps, 2.0)
    assert np.all(chi[np.isclose(eps * b.totals, 2.0)] == 0)
    order = np.argsort(b.totals, kind="stable")
    assert np.all(np.diff(chi[order]) <= 0)
    for n in (0.5, 1.0, 1.7):
        cn, cm = cutoff_values(b, eps, n), cutoff_values(b, eps, 2 * n)
        assert np.array_equal(cn * cm, cn)
    assert support_cutoff(0.1, 2.0) == 19
    assert np.all(cutoff_values(b, eps, 2.0)[b.totals > support_cutoff(eps, 2.0)] == 0)
    with pytest.raises(ValueError):
        cutoff_operator(b, eps, 0.0)


def test_operator_type_checks():
    b = FockBasis(1, 3)
    with pytest.raises(ValueError):
        FockOperator(b, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        FockOperator(b, np.triu(np.ones((4, 4))), hermitian=True)
    a = annihilation(b, 0)
    assert np.allclose((a.commutator(a.adjoint())).toarray()[:3, :3], np.eye(3))
    assert (2 * a - a).toarray().tolist() == a.toarray().tolist()
    sub = FockBasis(1, 2)
    assert a.restrict(sub).toarray().shape == (3, 3)
