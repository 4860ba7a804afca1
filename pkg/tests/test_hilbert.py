import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jcsim.hilbert import (
    HilbertDims, basis_index, basis_projector, check_density_matrix, embed,
    fock_annihilation, hermitian_eigenvalues, joint_operators, partial_trace, qubit_ops,
)

from conftest import random_density


def brute_partial_trace(rho, n_fock, keep):
    # explicit index loops; independent of the reshape/einsum path
    out = np.zeros((2, 2) if keep == "qubit" else (n_fock, n_fock), dtype=complex)
    for i in range(2):
        for j in range(2):
            for m in range(n_fock):
                for k in range(n_fock):
                    if keep == "qubit" and m == k:
                        out[i, j] += rho[i * n_fock + m, j * n_fock + k]
                    if keep == "photon" and i == j:
                        out[m, k] += rho[i * n_fock + m, j * n_fock + k]
    return out


def test_dims_validation():
    assert HilbertDims(5).total_dim == 10
    with pytest.raises(ValueError):
        HilbertDims(1)
    with pytest.raises(ValueError):
        HilbertDims(2.5)


def test_annihilation_small_cases():
    np.testing.assert_array_equal(fock_annihilation(HilbertDims(2)), [[0, 1], [0, 0]])
    a3 = fock_annihilation(HilbertDims(3))
    expected = np.zeros((3, 3))
    expected[0, 1] = 1.0
    expected[1, 2] = np.sqrt(2)
    np.testing.assert_allclose(a3, expected, atol=0)
    assert a3[1, 2] == pytest.approx(1.41421356, abs=1e-8)


def test_truncated_commutator():
    a = fock_annihilation(HilbertDims(40))
    comm = a @ a.conj().T - a.conj().T @ a
    expected = np.eye(40)
    expected[-1, -1] = -39.0
    np.testing.assert_allclose(comm, expected, atol=1e-12)


def test_qubit_ops():
    sm, sp, sz, sx = qubit_ops()
    np.testing.assert_array_equal(sp @ sm, np.diag([1, 0]))
    np.testing.assert_array_equal(sx @ sx, np.eye(2))
    np.testing.assert_array_equal(sp, sm.conj().T)
    ground = np.array([0, 1])
    assert ground @ ((sz + np.eye(2)) / 2) @ ground == 0


def test_embed_identity_and_kron_order():
    dims = HilbertDims(4)
    np.testing.assert_array_equal(embed(None, None, dims), np.eye(8))
    _, _, sz, _ = qubit_ops()
    np.testing.assert_array_equal(embed(sz, None, HilbertDims(2)), np.diag([1, 1, -1, -1]))
    with pytest.raises(ValueError):
        embed(np.eye(3), None, dims)
    with pytest.raises(ValueError):
        embed(None, np.eye(3), dims)


@pytest.mark.parametrize("n_fock", [2, 3, 7, 40])
def test_embed_trace_factorizes(n_fock):
    dims = HilbertDims(n_fock)
    sm, sp, _, _ = qubit_ops()
    a = fock_annihilation(dims)
    lhs = np.trace(embed(sp @ sm, None, dims) @ embed(None, a.conj().T @ a, dims))
    # Tr(A (x) B) = Tr A Tr B
    oracle = np.trace(sp @ sm) * np.trace(a.conj().T @ a)
    assert lhs == pytest.approx(oracle, abs=1e-12)
    assert lhs == pytest.approx(n_fock * (n_fock - 1) / 2, abs=1e-12)


def test_embed_preserves_operator_norm(rng):
    dims = HilbertDims(3)
    for _ in range(10):
        q = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert np.linalg.norm(embed(q, None, dims), 2) == pytest.approx(np.linalg.norm(q, 2))
        assert np.linalg.norm(embed(None, b, dims), 2) == pytest.approx(np.linalg.norm(b, 2))


def test_joint_operator_commutation():
    o = joint_operators(HilbertDims(5))
    # photon and qubit operators act on different factors
    np.testing.assert_allclose(o.a @ o.sp - o.sp @ o.a, 0, atol=1e-14)
    np.testing.assert_allclose(o.n_qubit, (o.sz + np.eye(10)) / 2, atol=1e-14)


def test_partial_trace_product_ground():
    dims = HilbertDims(3)
    rho = basis_projector(dims, "g", 0)
    np.testing.assert_array_equal(partial_trace(rho, "qubit", dims), np.diag([0, 1]))
    np.testing.assert_array_equal(partial_trace(rho, "photon", dims), np.diag([1, 0, 0]))


def test_partial_trace_recovers_factors(rng):
    dims = HilbertDims(4)
    for _ in range(5):
        rq, rp = random_density(2, rng), random_density(4, rng)
        rho = np.kron(rq, rp)
        np.testing.assert_allclose(partial_trace(rho, "qubit", dims), rq, atol=1e-14)
        np.testing.assert_allclose(partial_trace(rho, "photon", dims), rp, atol=1e-14)


def test_partial_trace_bell_state():
    dims = HilbertDims(3)
    psi = np.zeros(6, dtype=complex)
    psi[basis_index(dims, "e", 0)] = psi[basis_index(dims, "g", 1)] = 1 / np.sqrt(2)
    rho = np.outer(psi, psi.conj())
    for keep in ("qubit", "photon"):
        red = partial_trace(rho, keep, dims)
        np.testing.assert_allclose(red, brute_partial_trace(rho, 3, keep), atol=1e-15)
    np.testing.assert_allclose(partial_trace(rho, "qubit", dims), np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(partial_trace(rho, "photon", dims)[:2, :2], np.eye(2) / 2, atol=1e-15)


def test_partial_trace_matches_brute_force_and_keeps_trace(rng):
    dims = HilbertDims(5)
    rho = random_density(10, rng)
    for keep in ("qubit", "photon"):
        red = partial_trace(rho, keep, dims)
        np.testing.assert_allclose(red, brute_partial_trace(rho, 5, keep), atol=1e-14)
        assert abs(np.trace(red) - np.trace(rho)) < 1e-12
    with pytest.raises(ValueError):
        partial_trace(rho, "cavity", dims)


def test_hermitian_eigenvalues(rng):
    np.testing.assert_allclose(hermitian_eigenvalues(np.diag([0.75, 0.25])), [0.25, 0.75])
    _, _, _, sx = qubit_ops()
    np.testing.assert_allclose(hermitian_eigenvalues(sx), [-1, 1])
    x = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = x + x.conj().T
    assert hermitian_eigenvalues(h).sum() == pytest.approx(np.trace(h).real, abs=1e-10)
    with pytest.raises(ValueError):
        hermitian_eigenvalues(x)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_fock=st.integers(2, 6))
def test_density_spectrum_sums_to_one(seed, n_fock):
    rho = random_density(2 * n_fock, np.random.default_rng(seed))
    check_density_matrix(rho)
    assert hermitian_eigenvalues(rho).sum() == pytest.approx(1.0, abs=1e-8)


def test_check_density_matrix_rejects():
    with pytest.raises(ValueError, match="trace"):
        check_density_matrix(np.eye(2))
    with pytest.raises(ValueError, match="negative"):
        check_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError, match="Hermitian"):
        check_density_matrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
