"""One-step comparison coefficients for CPTP maps.

* ``alpha_md``: mass of the largest common PSD lower bound of all pure-state
  outputs (state-level Markov-Dobrushin minorisation).
* ``alpha_doeblin``: largest ``c`` with ``Phi - c R_tau`` completely positive.
* Hilbert projective metric, the normalised projective contraction
  coefficient and sampled projective diameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import min_output_eigenvalue, pure_outputs
from .linalg import hermitian_part, psd_sqrt_and_support, random_unit_vectors
from .sdp import LmiGroup, hermitian_basis, hermitian_from_coords, solve_lmi

DEFAULT_SEED = 0xD0B0


@dataclass
class MinorizationCertificate:
    """Common lower bound ``B <= Phi(P)`` for all pure ``P``.

    ``alpha = tr B`` is a lower bound on the Markov-Dobrushin coefficient when
    ``verified``.  ``alpha_upper`` is the value of the sampled relaxation (an
    upper bound up to solver tolerance) when it was computed.
    """

    B: np.ndarray
    alpha: float
    verified: bool
    worst_violation: float
    alpha_upper: float | None = None
    method: str = "decomposable"
    relaxed: bool = False
    details: dict = field(default_factory=dict)


def partial_transpose(M, d1, d2):
    """Transpose of the second tensor factor of a ``(d1 d2) x (d1 d2)`` matrix."""
    return M.reshape(d1, d2, d1, d2).transpose(0, 3, 2, 1).reshape(d1 * d2, d1 * d2)


def _clip_psd(B):
    w, V = np.linalg.eigh(hermitian_part(B))
    return (V * np.clip(w, 0.0, None)) @ V.conj().T


def _decomposable_lower(channel, tol):
    # B <= Phi(P) for every pure P  <=>  d J - B (x) I is positive on product vectors;
    # P + Q^Gamma with P, Q >= 0 is a sufficient (for d = 2 exact) certificate.
    d = channel.d
    n = d * d
    HB = hermitian_basis(d)
    HQ = hermitian_basis(n)
    pB, pQ = len(HB), len(HQ)
    p = pB + pQ
    I = np.eye(d)

    FaB = np.zeros((p, 1, d, d), dtype=complex)
    FaB[:pB, 0] = HB
    FaQ = np.zeros((p, 1, n, n), dtype=complex)
    FaQ[pB:, 0] = HQ
    FaP = np.zeros((p, 1, n, n), dtype=complex)
    FaP[:pB, 0] = -np.array([np.kron(H, I) for H in HB])
    FaP[pB:, 0] = -np.array([partial_transpose(H, d, d) for H in HQ])
    groups = [
        LmiGroup(np.zeros((1, d, d), dtype=complex), FaB),
        LmiGroup(np.zeros((1, n, n), dtype=complex), FaQ),
        LmiGroup((d * channel.choi)[None], FaP),
    ]
    c = np.zeros(p)
    c[:pB] = np.real(np.einsum("aii->a", HB))
    res = solve_lmi(c, groups, tol=tol)
    # I^Gamma = I, so moving 2s from B to Q absorbs the solver slack exactly
    B = hermitian_from_coords(res.x[:pB], HB) - 2.0 * res.slack * np.eye(d)
    return _clip_psd(B), res


def _sampled_upper(channel, psis, tol):
    d = channel.d
    HB = hermitian_basis(d)
    outs = pure_outputs(channel.superop, psis)
    K = outs.shape[0]
    FaB = HB[:, None]
    FaS = -np.broadcast_to(HB[:, None], (len(HB), K, d, d))
    groups = [LmiGroup(np.zeros((1, d, d), dtype=complex), FaB), LmiGroup(outs, np.ascontiguousarray(FaS))]
    c = np.real(np.einsum("aii->a", HB))
    res = solve_lmi(c, groups, tol=tol)
    return _clip_psd(hermitian_from_coords(res.x, HB)), res


def alpha_md(channel, sample_count=256, restarts=64, seed=DEFAULT_SEED, tol=1e-10, sampled_upper=True):
    """Verified lower bound on the state-level Markov-Dobrushin coefficient.

    The candidate ``B`` comes from a decomposable certificate
    ``d J(Phi) - B (x) I = P + Q^Gamma`` with ``P, Q >= 0``, which implies
    ``B <= Phi(P)`` for every pure state.  A multi-start search for the most
    negative eigenvalue of ``Phi(P) - B`` then double-checks the bound.

    With ``sampled_upper`` the same maximisation over a finite sample of pure
    states (computational basis plus ``sample_count`` Haar states) is solved
    as well; it can only overshoot, so it brackets the true value.
    """
    d = channel.d
    B, res = _decomposable_lower(channel, tol)
    worst, psi = min_output_eigenvalue(channel, B=B, restarts=restarts, seed=seed)
    alpha = float(np.real(np.trace(B)))
    cert = MinorizationCertificate(
        B=B,
        alpha=min(max(alpha, 0.0), 1.0),
        verified=worst >= -1e-8,
        worst_violation=float(worst),
        method="decomposable",
        relaxed=res.relaxed,
        details={"gap": res.gap, "worst_state": psi},
    )
    if sampled_upper:
        rng = np.random.default_rng(seed)
        psis = np.concatenate([np.eye(d, dtype=complex), random_unit_vectors(rng, sample_count, d)])
        Bs, _ = _sampled_upper(channel, psis, tol)
        cert.alpha_upper = float(np.real(np.trace(Bs)))
    return cert


@dataclass
class DoeblinResult:
    alpha: float
    tau_hat: np.ndarray
    relaxed: bool
    defect: float


def alpha_doeblin(channel, tol=1e-8):
    """CP-order Doeblin coefficient by the SDP ``max tr T  s.t. T >= 0, T (x) I/d <= J(Phi)``.

    Returns a :class:`DoeblinResult`; ``defect`` is the most negative
    eigenvalue of ``J(Phi) - T (x) I/d`` (zero up to rounding unless the
    problem had to be relaxed).
    """
    d = channel.d
    HB = hermitian_basis(d)
    I = np.eye(d)
    groups = [
        LmiGroup(np.zeros((1, d, d), dtype=complex), HB[:, None]),
        LmiGroup(channel.choi[None], -np.array([np.kron(H, I) / d for H in HB])[:, None]),
    ]
    c = np.real(np.einsum("aii->a", HB))
    res = solve_lmi(c, groups, tol=tol * 1e-2)
    T = _clip_psd(hermitian_from_coords(res.x, HB) - d * res.slack * np.eye(d))
    defect = float(min(np.linalg.eigvalsh(hermitian_part(channel.choi - np.kron(T, I) / d))[0], 0.0))
    alpha = float(np.clip(np.real(np.trace(T)), 0.0, 1.0))
    return DoeblinResult(alpha=alpha, tau_hat=T, relaxed=res.relaxed, defect=defect)


# -- projective quantities ---------------------------------------------------------------


def _support_rank(A, rtol=1e-10):
    w = np.linalg.eigvalsh(hermitian_part(A))
    top = max(w[-1], 0.0)
    return int(np.sum(w > rtol * top)) if top > 0 else 0


def _contains_support(A, B, rtol=1e-10):
    """True when ``supp(B)`` lies inside ``supp(A)``."""
    return _support_rank(A + B, rtol) == _support_rank(A, rtol)


def ratio_min(A, B, rtol=1e-10):
    """``m(A, B) = sup{lam >= 0 : lam B <= A}`` for PSD ``A, B``."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if not _contains_support(A, B, rtol):
        return 0.0
    wA, VA = psd_sqrt_and_support(A, rtol)
    Bs = VA.conj().T @ B @ VA
    Ais = np.diag(wA ** -0.5)
    top = float(np.linalg.eigvalsh(hermitian_part(Ais @ Bs @ Ais))[-1])
    return np.inf if top <= 0 else 1.0 / top


def hilbert_metric(A, B, rtol=1e-10):
    """Hilbert projective distance ``log(sup(A/B) sup(B/A))``; ``inf`` for different supports."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if np.allclose(A, 0) or np.allclose(B, 0):
        raise ValueError("hilbert_metric needs nonzero PSD matrices")
    if not (_contains_support(A, B, rtol) and _contains_support(B, A, rtol)):
        return np.inf
    w, V = psd_sqrt_and_support(A + B, rtol)
    As = V.conj().T @ A @ V
    Bs = V.conj().T @ B @ V
    wb, Vb = np.linalg.eigh(hermitian_part(Bs))
    Bis = (Vb * wb ** -0.5) @ Vb.conj().T
    mu = np.linalg.eigvalsh(hermitian_part(Bis @ As @ Bis))
    return float(np.log(mu[-1] / mu[0]))


def projective_distance(A, B, rtol=1e-10):
    """Bounded projective distance ``(1 - m m') / (1 + m m')``."""
    mm = ratio_min(A, B, rtol) * ratio_min(B, A, rtol)
    return float((1 - mm) / (1 + mm))


def _output_pairs(channel, n_pairs, seed):
    d = channel.d
    rng = np.random.default_rng(seed)
    basis = np.eye(d, dtype=complex)
    first = [basis[i] for i in range(d) for j in range(d) if i < j]
    second = [basis[j] for i in range(d) for j in range(d) if i < j]
    a = np.concatenate([np.array(first).reshape(-1, d), random_unit_vectors(rng, n_pairs, d)])
    b = np.concatenate([np.array(second).reshape(-1, d), random_unit_vectors(rng, n_pairs, d)])
    return pure_outputs(channel.superop, a), pure_outputs(channel.superop, b)


def projective_contraction_c(channel, n_pairs=256, seed=DEFAULT_SEED):
    """Sampled lower bound on the normalised projective contraction coefficient.

    Computational-basis pairs are always included.  The map may be any
    positive map given as a ``QuantumChannel``-like object with ``superop``.
    """
    A, B = _output_pairs(channel, n_pairs, seed)
    trA = np.real(np.einsum("nii->n", A))
    trB = np.real(np.einsum("nii->n", B))
    if np.any(trA <= 0) or np.any(trB <= 0):
        raise ValueError("normalisation failure: tr Phi(A) <= 0 for a sampled state")
    best = 0.0
    for X, Y, tx, ty in zip(A, B, trA, trB):
        best = max(best, projective_distance(X / tx, Y / ty))
    return best


def projective_diameter_lower(channel, n_pairs=256, seed=DEFAULT_SEED):
    """Sampled lower bound on the Hilbert projective diameter (may be ``inf``)."""
    A, B = _output_pairs(channel, n_pairs, seed)
    best = 0.0
    for X, Y in zip(A, B):
        h = hilbert_metric(X, Y)
        if np.isinf(h):
            return np.inf
        best = max(best, h)
    return best


__all__ = [
    "DoeblinResult",
    "MinorizationCertificate",
    "alpha_doeblin",
    "alpha_md",
    "hilbert_metric",
    "partial_transpose",
    "projective_contraction_c",
    "projective_diameter_lower",
    "projective_distance",
    "ratio_min",
]
