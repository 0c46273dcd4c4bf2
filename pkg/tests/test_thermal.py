import numpy as np
import pytest

from kmslab.fock import (
    FockBasis,
    FockOperator,
    ModelParams,
    bose_hubbard_hamiltonian,
    cutoff_operator,
    cutoff_values,
    interaction_operator,
    number_operator,
    quadratic_hamiltonian,
    weyl_operator,
)
from kmslab.graph import path
from kmslab.thermal import (
    ConditioningError,
    bogoliubov_check,
    complex_time_difference,
    expectation,
    gibbs_state,
    golden_thompson_check,
    kms_pair,
    model_state,
    number_moment,
    partition_ratio,
    quasi_free_state,
    random_bounded_operator,
    saturation_check,
    spectral_decomposition,
)


def one_site(eps=0.2, beta=1.0, lam=1.0, kappa=-1.0, n_max=None, eps_bar=1.0):
    n_max = n_max if n_max is not None else int(np.ceil(8 / eps))
    p = ModelParams(eps, beta, lam, kappa, eps_bar)
    return model_state(path(1), p, n_max)


def test_gibbs_state_closed_form():
    b, H, st = one_site(1.0, n_max=2, eps_bar=2.0)
    assert np.allclose(np.sort(st.decomposition.eigenvalues), [0, 1, 3])
    assert np.isclose(st.log_partition, np.log(1 + np.exp(-1) + np.exp(-3)), rtol=1e-14)


def test_gibbs_state_invariants():
    b, H, st = model_state(path(3), ModelParams(0.3, 0.7, 1.0, -0.5), 6)
    w = np.concatenate(st.weights)
    assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12
    dec = st.decomposition
    h = H.toarray()
    assert np.abs(dec.reconstruct() - h).max() <= 1e-9 * np.abs(h).max()
    u, _ = dec.restricted(slice(0, b.dim))
    assert np.abs(u.conj().T @ u - np.eye(b.dim)).max() <= 1e-10
    for vals in dec.values:
        assert np.all(np.diff(vals) >= 0)
    assert np.isclose(expectation(st, FockOperator(b, np.eye(b.dim))), 1, atol=1e-12)


def test_non_number_conserving_decomposition():
    b = FockBasis(1, 5)
    H = FockOperator(b, number_operator(b, 1.0).toarray() + 0.3 * (np.eye(b.dim, k=1) + np.eye(b.dim, k=-1)),
                     hermitian=True)
    dec = spectral_decomposition(H)
    assert len(dec.blocks) == 1
    st = gibbs_state(H, 1.0)
    assert np.isclose(st.sector_probabilities().sum(), 1)
    with pytest.raises(ValueError):
        gibbs_state(H, 0.0)


def test_one_site_number_expectation_scalar_oracle():
    eps, beta, lam, kappa = 0.1, 1.3, 0.8, -0.6
    b, H, st = one_site(eps, beta, lam, kappa)
    n = np.arange(b.n_max + 1)
    h = -eps * kappa * n + eps**2 * lam / 2 * n * (n - 1)
    w = np.exp(-beta * (h - h.min()))
    oracle = eps * np.sum(n * w) / w.sum()
    assert np.isclose(expectation(st, number_operator(b, eps)).real, oracle, rtol=1e-12)
    assert np.isclose(number_moment(st, b, eps, 1), oracle, rtol=1e-12)


def test_large_beta_concentrates_on_vacuum():
    b, H, st = one_site(0.2, beta=200.0)
    assert st.weights[0][0] > 1 - 1e-12
    assert number_moment(st, b, 0.2, 1) < 1e-10
    assert number_moment(st, b, 0.2, 3) < 1e-10


def test_expectation_of_hamiltonian_is_energy():
    g, n_max = path(2), 20
    beta, h = 1.0, 1e-4
    p = ModelParams(0.2, beta, 1.0, -1.0)
    b, H, st = model_state(g, p, n_max)
    lz = lambda bb: model_state(g, ModelParams(0.2, bb, 1.0, -1.0), n_max)[2].log_partition
    energy = -(lz(beta + h) - lz(beta - h)) / (2 * h)
    e = expectation(st, H)
    assert abs(e.imag) <= 1e-10
    assert np.isclose(e.real, energy, rtol=1e-6)


def test_expectation_weyl_zero_linearity_and_stationarity():
    b, H, st = model_state(path(2), ModelParams(0.2, 1.0, 1.0, -1.0), 12)
    assert np.isclose(expectation(st, weyl_operator(b, [0, 0], 0.2)), 1)
    rng = np.random.default_rng(5)
    A = random_bounded_operator(b, 0.2, rng)
    B = random_bounded_operator(b, 0.2, rng)
    c1, c2 = 0.3 - 1.2j, 2.1 + 0.4j
    lin = expectation(st, c1 * A + c2 * B) - (c1 * expectation(st, A) + c2 * expectation(st, B))
    assert abs(lin) <= 1e-12
    for op in (A, B):
        comm = H.commutator(op)
        assert abs(expectation(st, comm)) <= 1e-10 * np.linalg.norm(op.toarray(), 2)


def test_expectation_on_prefix_basis():
    b, H, st = one_site(0.1)
    sub = b.prefix(20)
    chi = cutoff_operator(sub, 0.1, 1.0)
    assert np.isclose(expectation(st, chi), expectation(st, cutoff_operator(b, 0.1, 1.0)), rtol=1e-13)


def test_kms_pair_examples():
    b, H, st = one_site(0.2, n_max=6)
    I = FockOperator(b, np.eye(b.dim))
    assert np.allclose(kms_pair(st, H, 1.0, I, I), (1, 1))
    rng = np.random.default_rng(0)
    for _ in range(10):
        A = FockOperator(b, rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7)))
        B = FockOperator(b, rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7)))
        for method in ("stable", "eigenbasis"):
            lhs, rhs = kms_pair(st, H, 1.0, A, B, method=method)
            assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_kms_pair_weyl_p2():
    eps = 0.1
    b, H, st = model_state(path(2), ModelParams(eps, 1.0, 1.0, -1.0), 12)
    A = weyl_operator(b, [1.0, 0.5j], eps, method="projected")
    B = weyl_operator(b, [-0.3j, 0.8], eps, method="projected")
    lhs, rhs = kms_pair(st, H, 1.0, A, B)
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))
    with pytest.raises(ValueError):
        kms_pair(st, H, 1.0, A, FockOperator(FockBasis(2, 5), np.eye(21)))
    with pytest.raises(ValueError):
        kms_pair(st, H, 2.0, A, B)
    with pytest.raises(ValueError):
        kms_pair(st, H, 1.0, A, B, method="series")


@pytest.mark.filterwarnings("ignore::kmslab.fock.TruncationWarning")
def test_complex_time_difference_trivial_cases():
    eps = 0.1
    b, H, st = model_state(path(2), ModelParams(eps, 1.0, 1.0, -1.0), 10)
    chi = cutoff_operator(b, eps, 0.6)
    assert np.abs(complex_time_difference(st, H, 1.0, chi, eps).toarray()).max() <= 1e-12
    W = weyl_operator(b, [1.0, 1j], eps, method="projected")
    assert np.abs(complex_time_difference(st, H, 0.0, W, eps).toarray()).max() == 0


def test_complex_time_difference_ratio_cap():
    eps = 0.2
    b, H, st = one_site(eps, beta=5.0)
    W = weyl_operator(b, [1.0], eps, method="projected")
    with pytest.raises(ConditioningError, match="smaller cutoff"):
        complex_time_difference(st, H, 5.0, W, eps)
    sub = b.prefix(8)
    chi = cutoff_values(sub, eps, 1.0)
    Wm = FockOperator(sub, chi[:, None] * W.toarray()[:9, :9] * chi[None, :], eps)
    complex_time_difference(st, H, 5.0, Wm, eps)


def test_complex_time_difference_linearizes_to_commutator():
    """omega(A_n X) approaches beta omega(A_n [B_m, H]/(i eps)) at rate eps."""
    n_scale, m_scale = 2.0, 4.0
    f, g = [1.0], [1j]
    gaps, epss = [], [0.2, 0.1, 0.05, 0.025]
    for eps in epss:
        b, H, st = one_site(eps)
        K = int(np.ceil(m_scale / eps))
        sub = b.prefix(min(K, b.n_max))
        idx = slice(0, sub.dim)
        cn, cm = cutoff_values(sub, eps, n_scale), cutoff_values(sub, eps, m_scale)
        A = FockOperator(sub, cn[:, None] * weyl_operator(b, f, eps, "projected").toarray()[idx, idx] * cn[None, :])
        B = FockOperator(sub, cm[:, None] * weyl_operator(b, g, eps, "projected").toarray()[idx, idx] * cm[None, :])
        X = complex_time_difference(st, H, 1.0, B, eps)
        lhs = expectation(st, A @ X)
        h = H.restrict(sub)
        lin = expectation(st, A @ (B.commutator(h) * (1 / (1j * eps))))
        gaps.append(abs(lhs - lin))
    slope = np.polyfit(np.log(epss), np.log(gaps), 1)[0]
    assert slope >= 0.8


def test_golden_thompson():
    a = np.diag([0.3, -1.2, 2.0])
    lhs, rhs = golden_thompson_check(a, np.diag([1.0, 0.5, -0.1]))
    assert np.isclose(lhs, rhs, rtol=1e-10)
    sx, sz = np.array([[0, 1], [1, 0]]), np.array([[1, 0], [0, -1]])
    lhs, rhs = golden_thompson_check(sx, sz)
    exact = 2 * np.cosh(np.sqrt(2))  # eigenvalues of sx + sz are +-sqrt(2)
    assert np.isclose(lhs, exact) and lhs < rhs
    assert np.isclose(rhs, 2 * np.cosh(1) ** 2)
    eps, beta, lam = 0.2, 1.0, 1.0
    b = FockBasis(2, 20)
    A = quadratic_hamiltonian(b, path(2), eps, -1.0) * -beta
    B = interaction_operator(b) * (-beta * eps**2 * lam / 2)
    lhs, rhs = golden_thompson_check(A, B)
    assert lhs <= rhs * (1 + 1e-9)


def test_quasi_free_state_one_site():
    eps, beta, kappa = 0.1, 1.0, -1.0
    b = FockBasis(1, 500)
    st = quasi_free_state(b, path(1), eps, beta, kappa)
    n = np.arange(b.n_max + 1)
    w = np.exp(beta * eps * kappa * n)
    assert np.isclose(number_moment(st, b, eps, 1), eps * np.sum(n * w) / w.sum(), rtol=1e-12)
    assert np.isclose(number_moment(st, b, eps, 1), eps / (np.exp(-beta * eps * kappa) - 1), rtol=1e-10)
    assert np.isclose(st.weights[0][0], 1 / w.sum(), rtol=1e-12)


def test_quasi_free_classical_limit():
    eps, beta, kappa = 1e-3, 1.0, -1.0
    b = FockBasis(1, 40000)
    st = quasi_free_state(b, path(1), eps, beta, kappa)
    assert abs(number_moment(st, b, eps, 1) - (-1 / (beta * kappa))) <= 0.01 / (beta * abs(kappa))


def test_bogoliubov_examples():
    b = FockBasis(2, 12)
    lhs, rhs = bogoliubov_check(b, path(2), ModelParams(0.5, 1.0, 1.0, -1.0))
    assert lhs <= rhs + 1e-9 * (1 + abs(rhs))
    free = quasi_free_state(b, path(2), 0.5, 1.0, -1.0)
    assert np.isclose(rhs, 1.0 * 0.25 * 0.5 * expectation(free, interaction_operator(b)).real, rtol=1e-10)
    lhs, rhs = bogoliubov_check(b, path(2), ModelParams(0.5, 1.0, 1e-9, -1.0))
    assert abs(lhs) < 1e-8 and abs(rhs) < 1e-8


def test_partition_ratio_bounded_over_sweep():
    ratios = []
    for eps in (0.2, 0.1, 0.05):
        p = ModelParams(eps, 1.0, 1.0, -1.0)
        ratios.append(partition_ratio(FockBasis(2, int(np.ceil(8 / eps))), path(2), p))
    assert all(r >= 1 for r in ratios)
    # the ratio approaches the classical value; it must not blow up
    assert max(ratios) <= 2 * min(ratios)


def test_saturation_and_truncation():
    g, p = path(2), ModelParams(0.1, 1.0, 1.0, -1.0)
    ok, rel = saturation_check(g, p, 80)
    assert ok and rel <= 1e-8
    ok, rel = saturation_check(g, p, 4)
    assert not ok
    b, H, st = model_state(g, p, 30)
    b2, H2, st2 = model_state(g, p, 20)
    t = st.truncated(20)
    assert np.isclose(t.log_partition, st2.log_partition, rtol=1e-13)
    assert np.allclose(np.concatenate(t.weights), np.concatenate(st2.weights), atol=1e-15)
    assert 0 <= st.tail_weight() <= 1
