import numpy as np
import pytest

from dobrushin.sdp import LmiGroup, hermitian_basis, hermitian_from_coords, solve_lmi

from conftest import random_hermitian


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_hermitian_basis_orthonormal(n):
    H = hermitian_basis(n)
    assert H.shape == (n * n, n, n)
    assert np.allclose(H, np.conj(np.transpose(H, (0, 2, 1))))
    gram = np.einsum("aij,bij->ab", H.conj(), H)
    assert np.allclose(gram, np.eye(n * n), atol=1e-12)


def test_hermitian_coordinates_round_trip(rng):
    H = hermitian_basis(3)
    M = random_hermitian(rng, 3)
    x = np.real(np.einsum("aij,ij->a", H.conj(), M))
    assert np.allclose(hermitian_from_coords(x, H), M, atol=1e-12)


def test_simplex_lp():
    # max x1 + 2 x2 over the simplex x >= 0, x1 + x2 <= 1: optimum 2 at (0, 1)
    Fa = np.zeros((2, 3, 1, 1))
    Fa[0, 0], Fa[1, 1] = 1.0, 1.0
    Fa[:, 2] = -1.0
    F0 = np.array([0.0, 0.0, 1.0]).reshape(3, 1, 1)
    res = solve_lmi(np.array([1.0, 2.0]), [LmiGroup(F0, Fa)], x0=np.array([0.2, 0.2]), tol=1e-10)
    assert not res.relaxed
    assert res.objective == pytest.approx(2.0, abs=1e-8)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_min_eigenvalue(rng, n):
    # max t s.t. A - t I >= 0 is lambda_min(A)
    A = random_hermitian(rng, n)
    grp = LmiGroup(A[None], -np.eye(n)[None, None])
    res = solve_lmi(np.array([1.0]), [grp], x0=np.array([-50.0]), tol=1e-11)
    assert res.objective == pytest.approx(np.linalg.eigvalsh(A)[0], abs=1e-8)


def test_penalty_start_from_infeasible_point(rng):
    A = random_hermitian(rng, 3)
    grp = LmiGroup(A[None], -np.eye(3)[None, None])
    res = solve_lmi(np.array([1.0]), [grp], x0=np.array([10.0]), tol=1e-11)
    assert res.relaxed
    assert res.slack >= 0
    assert res.objective == pytest.approx(np.linalg.eigvalsh(A)[0], abs=1e-6)


def test_thin_feasible_set_absorbs_slack():
    # x >= 0 and -x >= 0 has no interior; the relaxed solve must land at 0
    Fa = np.array([1.0, -1.0]).reshape(1, 2, 1, 1)
    grp = LmiGroup(np.zeros((2, 1, 1)), Fa)
    res = solve_lmi(np.array([1.0]), [grp], tol=1e-10)
    assert res.relaxed
    assert abs(res.x[0]) <= 1e-6
