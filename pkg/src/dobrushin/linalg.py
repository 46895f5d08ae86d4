"""Dense complex-matrix primitives.

Everything here works on plain ``numpy`` arrays.  Tolerances for the
Hermitian / state checks are relative and fixed at ``1e-10``.
"""

from __future__ import annotations

import numpy as np

HERM_TOL = 1e-10


def as_square(M, name="matrix"):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def dagger(M):
    return np.conj(np.swapaxes(M, -1, -2))


def is_hermitian(M, tol=HERM_TOL):
    M = np.asarray(M)
    scale = max(np.linalg.norm(M, 2), 1.0) if M.size else 1.0
    return bool(np.max(np.abs(M - dagger(M)), initial=0.0) <= tol * scale)


def hermitian_part(M):
    return 0.5 * (M + dagger(M))


def trace_norm(M):
    """Sum of the singular values of a square matrix."""
    M = as_square(M)
    if M.shape[0] == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(M, compute_uv=False)))


def hs_norm(M):
    return float(np.linalg.norm(np.asarray(M), "fro"))


def op_norm(M):
    return float(np.linalg.norm(np.asarray(M), 2))


def positive_negative_split(X):
    """Jordan decomposition ``X = X_plus - X_minus`` of a Hermitian matrix.

    The two parts are positive semidefinite with orthogonal supports.  For a
    traceless input both have trace ``||X||_1 / 2``.
    """
    X = as_square(X, "X")
    if not is_hermitian(X):
        raise ValueError("positive_negative_split needs a Hermitian matrix")
    w, V = np.linalg.eigh(hermitian_part(X))
    pos = np.clip(w, 0.0, None)
    neg = np.clip(-w, 0.0, None)
    X_plus = (V * pos) @ dagger(V)
    X_minus = (V * neg) @ dagger(V)
    return X_plus, X_minus


def kron(A, B):
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def partial_trace(M, dims, which="second"):
    """Partial trace of ``M`` on ``C^{d1} (x) C^{d2}``.

    ``which`` names the factor that is traced out.
    """
    d1, d2 = dims
    M = as_square(M)
    if M.shape[0] != d1 * d2:
        raise ValueError(f"matrix side {M.shape[0]} does not match dims {dims}")
    T = M.reshape(d1, d2, d1, d2)
    if which == "second":
        return np.einsum("ijkj->ik", T)
    if which == "first":
        return np.einsum("ijil->jl", T)
    raise ValueError("which must be 'first' or 'second'")


def is_density_matrix(rho, tol=HERM_TOL):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if not is_hermitian(rho, tol):
        return False
    if abs(np.trace(rho) - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(hermitian_part(rho))[0] >= -tol)


def check_density_matrix(rho, name="state"):
    rho = as_square(rho, name)
    if not is_density_matrix(rho):
        raise ValueError(f"{name} is not a density matrix")
    return rho


def is_hermitian_traceless(X, tol=HERM_TOL):
    X = np.asarray(X, dtype=complex)
    return is_hermitian(X, tol) and abs(np.trace(X)) <= tol * max(trace_norm(X), 1.0)


def psd_sqrt_and_support(A, rtol=1e-10):
    """Eigen-split of a PSD matrix: returns (eigenvalues, eigenvectors) on its support."""
    w, V = np.linalg.eigh(hermitian_part(np.asarray(A, dtype=complex)))
    top = max(w[-1], 0.0)
    keep = w > rtol * top if top > 0 else np.zeros_like(w, dtype=bool)
    return w[keep], V[:, keep]


# -- vectorisation (column stacking) ------------------------------------------------


def vec(X):
    return np.asarray(X).reshape(-1, order="F")


def unvec(v, d=None):
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.shape[-1])))
    return v.reshape(d, d, order="F")


def basis_state(d, i):
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def projector(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_unit_vectors(rng, count, d):
    z = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_density_matrix(rng, d, rank=None):
    rank = d if rank is None else rank
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_traceless_hermitian(rng, d):
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    H = hermitian_part(G)
    return H - np.trace(H) / d * np.eye(d)


def haar_unitary(rng, d):
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def haar_isometry(rng, rows, cols):
    """Haar-random isometry ``C^cols -> C^rows`` (QR with sign-fixed diagonal)."""
    Z = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph
