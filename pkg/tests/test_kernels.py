import numpy as np
import pytest

import kmgl
from kmgl.errors import DimensionError, InvalidKernelError


def test_diffusion_of_empty_graph_is_identity():
    g = kmgl.laplacian_from_weights([0.0, 0.0, 0.0], 3)
    k = kmgl.diffusion_kernel(g, 5.0)
    np.testing.assert_allclose(k.matrix, np.eye(3), atol=1e-14)


def test_diffusion_two_nodes_closed_form():
    g = kmgl.laplacian_from_weights([1.0], 2)
    k = kmgl.diffusion_kernel(g, 1.0)
    # closed-form inverse of [[2,-1],[-1,2]], cross-checked by a dense solve
    np.testing.assert_allclose(k.matrix, np.array([[2.0, 1.0], [1.0, 2.0]]) / 3.0, atol=1e-12)
    dense = np.linalg.solve(np.eye(2) + g.laplacian, np.eye(2))
    np.testing.assert_allclose(k.matrix, dense, atol=1e-12)


def test_diffusion_eigenvalues_in_unit_interval():
    g = kmgl.erdos_renyi(20, 0.3, 5)
    k = kmgl.diffusion_kernel(g, 10.0)
    eig = np.linalg.eigvalsh(k.matrix)
    assert eig.min() > 0.0
    assert eig.max() <= 1.0 + 1e-10


def test_diffusion_shares_eigenvectors_with_laplacian():
    # eigenvalue map lambda -> 1/(1 + eta*lambda) on small instances
    rng = np.random.default_rng(2)
    for n in (4, 7, 10):
        g = kmgl.laplacian_from_weights(rng.random(kmgl.edge_count(n)), n)
        eta = 3.0
        k = kmgl.diffusion_kernel(g, eta)
        lam, U = np.linalg.eigh(g.laplacian)
        reconstructed = U @ np.diag(1.0 / (1.0 + eta * lam)) @ U.T
        np.testing.assert_allclose(k.matrix, reconstructed, atol=1e-8)


def test_precomputed_identity_no_jitter():
    k = kmgl.precomputed_kernel(np.eye(4))
    np.testing.assert_array_equal(k.matrix, np.eye(4))
    assert k.jitter_applied == 0.0


def test_precomputed_indefinite_rejected():
    # eigenvalues {3, -1}; the jitter cap 1e-4*trace/n is far too small to fix it
    with pytest.raises(InvalidKernelError):
        kmgl.precomputed_kernel(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_precomputed_symmetrizes():
    k = kmgl.precomputed_kernel(np.array([[1.0, 0.2], [0.1, 1.0]]))
    np.testing.assert_allclose(k.matrix, [[1.0, 0.15], [0.15, 1.0]])


def test_precomputed_jitter_escalation():
    # PSD with an exactly zero eigenvalue: factorization needs a positive shift
    M = np.ones((3, 3))
    k = kmgl.precomputed_kernel(M, jitter_policy=1e-10)
    assert k.jitter_applied > 0.0
    assert k.jitter_applied <= 1e-4 * np.trace(M) / 3


def test_precomputed_non_square():
    with pytest.raises(DimensionError):
        kmgl.precomputed_kernel(np.zeros((2, 3)))


def test_quad_inv_identity():
    k = kmgl.precomputed_kernel(np.eye(2))
    assert k.quad_inv([3.0, 4.0]) == pytest.approx(25.0)


def test_quad_inv_scaling():
    k = kmgl.precomputed_kernel(2.0 * np.eye(2))
    assert k.quad_inv([2.0, 0.0]) == pytest.approx(2.0)


def test_quad_inv_matches_dense_inverse():
    rng = np.random.default_rng(3)
    for n in (5, 20, 50):
        A = rng.standard_normal((n, n))
        M = A @ A.T + n * np.eye(n)
        k = kmgl.precomputed_kernel(M)
        Kinv = np.linalg.inv(k.matrix)
        for _ in range(3):
            x = rng.standard_normal(n)
            expected = float(x @ Kinv @ x)
            assert k.quad_inv(x) == pytest.approx(expected, rel=1e-8)
            assert k.quad_inv(x) >= 0.0


def test_quad_inv_columns_consistent():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((6, 6))
    k = kmgl.precomputed_kernel(A @ A.T + 6 * np.eye(6))
    X = rng.standard_normal((6, 4))
    per_col = k.quad_inv_columns(X)
    for j in range(4):
        assert per_col[j] == pytest.approx(k.quad_inv(X[:, j]), rel=1e-12)


def test_quad_inv_dimension_mismatch():
    k = kmgl.precomputed_kernel(np.eye(3))
    with pytest.raises(DimensionError):
        k.quad_inv([1.0, 2.0])


def test_inverse_matrix_symmetric_and_correct():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((7, 7))
    k = kmgl.precomputed_kernel(A @ A.T + 7 * np.eye(7))
    inv = k.inverse_matrix()
    np.testing.assert_array_equal(inv, inv.T)
    np.testing.assert_allclose(inv @ k.matrix, np.eye(7), atol=1e-10)


def test_rbf_kernel_is_spd_and_unit_diagonal():
    rng = np.random.default_rng(6)
    coords = rng.standard_normal((8, 2))
    k = kmgl.rbf_kernel(coords, bandwidth=0.7)
    np.testing.assert_allclose(np.diag(k.matrix), 1.0, atol=1e-6)
    assert np.min(np.linalg.eigvalsh(k.matrix)) > 0


def test_kernel_csv_round_trip(tmp_path):
    g = kmgl.erdos_renyi(6, 0.5, 1)
    k = kmgl.diffusion_kernel(g, 10.0)
    path = tmp_path / "kernel.csv"
    kmgl.save_kernel_csv(k, path)
    k2 = kmgl.load_kernel_csv(path)
    np.testing.assert_array_equal(k.matrix, k2.matrix)
