import numpy as np
import pytest

from dobrushin.linalg import (
    haar_isometry,
    haar_unitary,
    is_density_matrix,
    is_hermitian_traceless,
    kron,
    partial_trace,
    positive_negative_split,
    psd_sqrt_and_support,
    random_density_matrix,
    random_traceless_hermitian,
    trace_norm,
    unvec,
    vec,
)


def test_trace_norm_examples():
    assert trace_norm(np.diag([1.0, -1.0])) == pytest.approx(2.0)
    assert trace_norm(np.zeros((3, 3))) == 0.0


def test_trace_norm_matches_svd(rng):
    M = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert trace_norm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False).sum(), abs=1e-10)


def test_trace_norm_rejects_non_square():
    with pytest.raises(ValueError):
        trace_norm(np.ones((2, 3)))


def test_trace_norm_is_a_norm(rng):
    for _ in range(500):
        A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        B = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        c = complex(rng.standard_normal(), rng.standard_normal())
        assert trace_norm(A + B) <= trace_norm(A) + trace_norm(B) + 1e-9
        assert trace_norm(c * A) == pytest.approx(abs(c) * trace_norm(A), abs=1e-9)
        assert abs(np.trace(A)) <= trace_norm(A) + 1e-12


def test_split_of_diag():
    P, N = positive_negative_split(np.diag([1.0, -1.0]))
    np.testing.assert_allclose(P, np.diag([1.0, 0.0]), atol=1e-12)
    np.testing.assert_allclose(N, np.diag([0.0, 1.0]), atol=1e-12)
    P, N = positive_negative_split(np.diag([2.0, -1.0, -1.0]))
    assert np.trace(P).real == pytest.approx(2.0)
    assert np.trace(N).real == pytest.approx(2.0)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_split_reconstruction(rng, d):
    X = random_traceless_hermitian(rng, d)
    P, N = positive_negative_split(X)
    np.testing.assert_allclose(P - N, X, atol=1e-9)
    np.testing.assert_allclose(P @ N, 0, atol=1e-9)
    half = trace_norm(X) / 2
    assert np.trace(P).real == pytest.approx(half, abs=1e-10)
    # X = (||X||_1 / 2)(rho_+ - rho_-) with orthogonal supports
    rp, rm = P / half, N / half
    assert is_density_matrix(rp) and is_density_matrix(rm)
    np.testing.assert_allclose(half * (rp - rm), X, atol=1e-9)


def test_split_zero_and_non_hermitian():
    P, N = positive_negative_split(np.zeros((2, 2)))
    assert np.all(P == 0) and np.all(N == 0)
    with pytest.raises(ValueError):
        positive_negative_split(np.array([[0, 1], [0, 0]]))


def test_kron_examples(rng):
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    A, B, C, D = (rng.standard_normal((2, 2)) for _ in range(4))
    np.testing.assert_allclose(kron(A, B) @ kron(C, D), kron(A @ C, B @ D), atol=1e-12)
    e = np.diag([1.0, 0.0])
    f = np.diag([0.0, 1.0])
    assert np.count_nonzero(kron(e, f)) == 1


def test_partial_trace(rng):
    A = rng.standard_normal((2, 2))
    B = rng.standard_normal((3, 3))
    np.testing.assert_allclose(partial_trace(kron(A, B), (2, 3), "second"), np.trace(B) * A, atol=1e-12)
    np.testing.assert_allclose(partial_trace(kron(np.eye(2), B), (2, 3), "first"), 2 * B, atol=1e-12)
    M = rng.standard_normal((4, 4))
    assert np.trace(partial_trace(M, (2, 2))) == pytest.approx(np.trace(M), abs=1e-12)
    with pytest.raises(ValueError):
        partial_trace(M, (2, 3))


def test_vec_is_column_stacking():
    X = np.array([[1, 2], [3, 4]])
    np.testing.assert_array_equal(vec(X), [1, 3, 2, 4])
    np.testing.assert_array_equal(unvec(vec(X)), X)


def test_density_and_traceless_checks(rng):
    assert is_density_matrix(random_density_matrix(rng, 3))
    assert not is_density_matrix(np.diag([1.5, -0.5]))
    assert is_hermitian_traceless(random_traceless_hermitian(rng, 4))
    assert is_hermitian_traceless(np.zeros((3, 3)))
    assert not is_hermitian_traceless(np.eye(2))


def test_haar_samples(rng):
    U = haar_unitary(rng, 3)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(3), atol=1e-12)
    V = haar_isometry(rng, 6, 2)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(2), atol=1e-12)


def test_psd_support_split(rng):
    rho = random_density_matrix(rng, 3, rank=2)
    w, V = psd_sqrt_and_support(rho)
    assert w.shape == (2,)
    np.testing.assert_allclose(V @ np.diag(w) @ V.conj().T, rho, atol=1e-10)
