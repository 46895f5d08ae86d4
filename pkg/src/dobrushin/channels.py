"""CPTP maps: construction, validation, representations and named examples.

Conventions
-----------
* Vectorisation stacks columns, so ``vec(A X B) = (B^T kron A) vec(X)`` and the
  superoperator of a Kraus family is ``sum_i conj(K_i) kron K_i``.
* The Choi matrix is normalised, ``J = (Phi (x) id)(|Omega><Omega|)`` with
  ``|Omega> = d^{-1/2} sum_i |i>|i>``; the output factor comes first.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .linalg import (
    as_square,
    basis_state,
    check_density_matrix,
    dagger,
    haar_isometry,
    hermitian_part,
    projector,
    random_unit_vectors,
)

TP_TOL = 1e-9
CP_TOL = 1e-9


class ChannelError(ValueError):
    """Raised when a map fails CPTP validation or a parameter is out of range."""


# -- representation conversions ------------------------------------------------------


def kraus_to_superop(kraus):
    K = np.asarray(kraus, dtype=complex)
    d = K.shape[-1]
    return np.einsum("kab,kcd->acbd", K.conj(), K).reshape(d * d, d * d)


def superop_to_choi(S):
    d = int(round(np.sqrt(S.shape[0])))
    # S[a + d b, i + d j] = Phi(E_ij)[a, b];  J[(a,i),(b,j)] = Phi(E_ij)[a, b] / d
    S4 = S.reshape(d, d, d, d)  # [b, a, j, i]
    return S4.transpose(1, 3, 0, 2).reshape(d * d, d * d) / d


def choi_to_superop(J):
    d = int(round(np.sqrt(J.shape[0])))
    J4 = J.reshape(d, d, d, d) * d  # [a, i, b, j]
    return J4.transpose(2, 0, 3, 1).reshape(d * d, d * d)


def choi_to_kraus(J, tol=1e-12):
    d = int(round(np.sqrt(J.shape[0])))
    w, V = np.linalg.eigh(hermitian_part(J))
    keep = w > tol * max(w[-1], tol)
    kraus = [np.sqrt(d * lam) * V[:, k].reshape(d, d) for lam, k in zip(w[keep], np.flatnonzero(keep))]
    if not kraus:
        kraus = [np.zeros((d, d), dtype=complex)]
    return kraus[::-1]


def apply_superop(S, X):
    """Apply a superoperator to one matrix or a stack ``(n, d, d)`` of matrices."""
    X = np.asarray(X, dtype=complex)
    d = X.shape[-1]
    if X.ndim == 2:
        return (S @ X.reshape(-1, order="F")).reshape(d, d, order="F")
    n = X.shape[0]
    V = X.transpose(0, 2, 1).reshape(n, d * d)
    return (V @ S.T).reshape(n, d, d).transpose(0, 2, 1)


def pure_outputs(S, psis):
    """``Phi(|psi><psi|)`` for a stack of vectors ``psis`` of shape ``(n, d)``."""
    P = np.einsum("na,nb->nab", psis, psis.conj())
    return apply_superop(S, P)


# -- the channel object ------------------------------------------------------------


class QuantumChannel:
    """A CPTP map on ``d x d`` matrices.

    The superoperator and Choi matrix are computed at construction.  A Kraus
    family is kept when given and otherwise regenerated from the Choi matrix
    on first access.

    Parameters
    ----------
    superop : ndarray, shape (d**2, d**2)
        Column-stacking superoperator.
    kraus : list of ndarray, optional
        Kraus operators consistent with ``superop``.
    label : dict, optional
        Named-channel description, used for serialisation and reports.
    validate : bool
        Check trace preservation and complete positivity.
    """

    def __init__(self, superop, kraus=None, label=None, validate=True):
        S = np.asarray(superop, dtype=complex)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ChannelError(f"superoperator must be square, got {S.shape}")
        d = int(round(np.sqrt(S.shape[0])))
        if d * d != S.shape[0]:
            raise ChannelError(f"superoperator side {S.shape[0]} is not a square number")
        if not np.all(np.isfinite(S)):
            raise ChannelError("superoperator has non-finite entries")
        self.d = d
        self.superop = S
        self.choi = superop_to_choi(S)
        self.label = label
        if kraus is not None:
            self.__dict__["kraus"] = [np.asarray(K, dtype=complex) for K in kraus]
        if validate:
            self.validate()

    # constructors
    @classmethod
    def from_kraus(cls, kraus, label=None, validate=True):
        kraus = [as_square(K, "Kraus operator") for K in kraus]
        if not kraus:
            raise ChannelError("empty Kraus family")
        d = kraus[0].shape[0]
        if any(K.shape != (d, d) for K in kraus):
            raise ChannelError("Kraus operators must share one square shape")
        return cls(kraus_to_superop(kraus), kraus=kraus, label=label, validate=validate)

    @classmethod
    def from_choi(cls, J, label=None, validate=True):
        return cls(choi_to_superop(np.asarray(J, dtype=complex)), label=label, validate=validate)

    # checks
    def tp_defect(self):
        """``||sum K^*K - I||_inf`` computed from the superoperator."""
        d = self.d
        vI = np.eye(d).reshape(-1, order="F")
        # the dual map applied to the identity is sum K^* K
        dual_I = (self.superop.conj().T @ vI).reshape(d, d, order="F")
        return float(np.linalg.norm(dual_I - np.eye(d), 2))

    def cp_defect(self):
        """Most negative Choi eigenvalue, clipped at zero."""
        w = np.linalg.eigvalsh(hermitian_part(self.choi))
        return float(max(-w[0], 0.0))

    def validate(self, tp_tol=TP_TOL, cp_tol=CP_TOL):
        tp = self.tp_defect()
        if tp > tp_tol:
            raise ChannelError(f"map is not trace preserving (defect {tp:.3e})")
        cp = self.cp_defect()
        if cp > cp_tol:
            raise ChannelError(f"map is not completely positive (Choi eigenvalue {-cp:.3e})")
        return self

    @cached_property
    def kraus(self):
        return choi_to_kraus(self.choi)

    # action
    def __call__(self, X):
        X = np.asarray(X, dtype=complex)
        if X.shape[-2:] != (self.d, self.d):
            raise ValueError(f"input of shape {X.shape} does not match channel dimension {self.d}")
        return apply_superop(self.superop, X)

    apply = __call__

    def dual(self, Y):
        """Heisenberg-picture (Hilbert-Schmidt adjoint) action."""
        return apply_superop(self.superop.conj().T, Y)

    def compose(self, other):
        """``self o other`` (``other`` acts first)."""
        if other.d != self.d:
            raise ValueError(f"cannot compose channels of dimension {self.d} and {other.d}")
        return QuantumChannel(self.superop @ other.superop, validate=False)

    def __matmul__(self, other):
        return self.compose(other)

    def bloch_matrix(self):
        """Real 3x3 linear part of a qubit channel on Bloch vectors."""
        if self.d != 2:
            raise ValueError("Bloch representation is only defined for qubits")
        paulis = PAULIS[1:]
        out = apply_superop(self.superop, np.array(paulis))
        return 0.5 * np.real(np.einsum("iab,jba->ij", np.array(paulis), out))

    def __repr__(self):
        tag = self.label["kind"] if self.label else "custom"
        return f"QuantumChannel(d={self.d}, {tag})"


PAULIS = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def identity_channel(d):
    return QuantumChannel.from_kraus([np.eye(d)], label={"kind": "identity", "d": d})


def from_kraus(kraus, label=None):
    return QuantumChannel.from_kraus(kraus, label=label)


def apply(channel, X):
    return channel(X)


def compose(A, B):
    """``A o B``."""
    return A.compose(B)


def compose_all(channels):
    """``channels[0] o channels[1] o ... o channels[-1]``."""
    channels = list(channels)
    if not channels:
        raise ValueError("nothing to compose")
    S = channels[0].superop
    for ch in channels[1:]:
        S = S @ ch.superop
    return QuantumChannel(S, validate=False)


def linear_combination(coeffs, channels):
    """Superoperator ``sum c_k Phi_k`` (not necessarily a channel)."""
    return sum(c * ch.superop for c, ch in zip(coeffs, channels))


# -- named channels -----------------------------------------------------------------


def _prob(name, value):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ChannelError(f"{name} must lie in [0, 1], got {value}")
    return value


def amplitude_damping(gamma):
    gamma = _prob("gamma", gamma)
    K0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    K1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return QuantumChannel.from_kraus([K0, K1], label={"kind": "amplitude_damping", "gamma": gamma})


def dephasing_z():
    P0, P1 = projector(basis_state(2, 0)), projector(basis_state(2, 1))
    return QuantumChannel.from_kraus([P0, P1], label={"kind": "dephasing_z"})


def dephasing_x():
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    minus = np.array([1, -1], dtype=complex) / np.sqrt(2)
    return QuantumChannel.from_kraus([projector(plus), projector(minus)], label={"kind": "dephasing_x"})


def depolarizing(p, d=2):
    """``X -> (1 - p) X + p tr(X) I / d``."""
    p = _prob("p", p)
    d = int(d)
    if d < 1:
        raise ChannelError("dimension must be positive")
    vI = np.eye(d).reshape(-1, order="F")
    S = (1 - p) * np.eye(d * d) + p * np.outer(vI / d, vI)
    return QuantumChannel(S, label={"kind": "depolarizing", "p": p, "d": d})


def unitary_channel(U):
    U = as_square(U, "U")
    if np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2) > 1e-10:
        raise ChannelError("U is not unitary")
    return QuantumChannel.from_kraus([U], label={"kind": "unitary", "U": U})


def werner_holevo_like(d):
    """``X -> (tr(X) I + X^T) / (d + 1)``."""
    d = int(d)
    if d < 2:
        raise ChannelError("werner_holevo_like needs d >= 2")
    vI = np.eye(d).reshape(-1, order="F")
    swap = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            swap[b + d * a, a + d * b] = 1.0
    S = (np.outer(vI, vI) + swap) / (d + 1)
    return QuantumChannel(S, label={"kind": "werner_holevo_like", "d": d})


def replacement_channel(tau):
    """``X -> tr(X) tau``, with Kraus family ``sqrt(lam_k) |v_k><e_j|``."""
    tau = check_density_matrix(tau, "tau")
    d = tau.shape[0]
    w, V = np.linalg.eigh(hermitian_part(tau))
    kraus = [
        np.sqrt(lam) * np.outer(V[:, k], basis_state(d, j))
        for k, lam in enumerate(w)
        if lam > 1e-15
        for j in range(d)
    ]
    vI = np.eye(d).reshape(-1, order="F")
    S = np.outer(tau.reshape(-1, order="F"), vI)
    return QuantumChannel(S, kraus=kraus, label={"kind": "replacement", "tau": tau})


def bit_swap():
    """Qubit channel ``X -> diag(x_11, x_00)`` (Kraus ``|1><0|``, ``|0><1|``)."""
    K0 = np.array([[0, 0], [1, 0]], dtype=complex)
    K1 = np.array([[0, 1], [0, 0]], dtype=complex)
    return QuantumChannel.from_kraus([K0, K1], label={"kind": "bit_swap"})


def random_channel(d, kraus_rank, seed):
    """Kraus family cut from a Haar-like isometry ``C^d -> C^{r d}``."""
    d, r = int(d), int(kraus_rank)
    if d < 2 or r < 1:
        raise ChannelError("random_channel needs d >= 2 and kraus_rank >= 1")
    rng = np.random.default_rng(seed)
    V = haar_isometry(rng, r * d, d)
    kraus = [V[i * d:(i + 1) * d, :] for i in range(r)]
    return QuantumChannel.from_kraus(kraus, label={"kind": "random", "d": d, "kraus_rank": r, "seed": seed})


_NAMED = {
    "amplitude_damping": lambda p: amplitude_damping(p["gamma"]),
    "dephasing_z": lambda p: dephasing_z(),
    "dephasing_x": lambda p: dephasing_x(),
    "depolarizing": lambda p: depolarizing(p["p"], p.get("d", 2)),
    "unitary": lambda p: unitary_channel(p["U"]),
    "werner_holevo_like": lambda p: werner_holevo_like(p["d"]),
    "replacement": lambda p: replacement_channel(p["tau"]),
    "bit_swap": lambda p: bit_swap(),
    "identity": lambda p: identity_channel(p.get("d", 2)),
    "random": lambda p: random_channel(p["d"], p["kraus_rank"], p["seed"]),
}


def make_named(kind, **params):
    """Build one of the named example channels.

    >>> make_named("amplitude_damping", gamma=0.36).d
    2
    """
    try:
        builder = _NAMED[kind]
    except KeyError:
        raise ChannelError(f"unknown channel kind {kind!r}") from None
    return builder(params)


# -- properties -------------------------------------------------------------------


def min_output_eigenvalue(channel, B=None, restarts=64, seed=0, max_iter=300, tol=1e-13, extra_starts=None):
    """Minimise ``lambda_min(Phi(|psi><psi|) - B)`` over unit vectors.

    Alternates between the bottom eigenvector ``w`` of the output and the
    bottom eigenvector of ``Phi^*(|w><w|)``; each half-step can only lower the
    objective.  Returns ``(value, psi)`` for the best restart.
    """
    d = channel.d
    B = np.zeros((d, d), dtype=complex) if B is None else np.asarray(B, dtype=complex)
    rng = np.random.default_rng(seed)
    starts = [np.eye(d, dtype=complex), random_unit_vectors(rng, restarts, d)]
    if extra_starts is not None:
        starts.append(np.atleast_2d(np.asarray(extra_starts, dtype=complex)))
    psi = np.concatenate(starts)
    S = channel.superop
    Sdag = S.conj().T
    prev = np.full(len(psi), np.inf)
    for _ in range(max_iter):
        M = pure_outputs(S, psi) - B
        w, V = np.linalg.eigh(hermitian_part(M))
        vals = w[:, 0]
        if np.max(prev - vals) < tol:
            break
        prev = vals
        wv = V[:, :, 0]
        G = apply_superop(Sdag, np.einsum("na,nb->nab", wv, wv.conj()))
        _, U = np.linalg.eigh(hermitian_part(G))
        psi = U[:, :, 0]
    M = pure_outputs(S, psi) - B
    vals = np.linalg.eigvalsh(hermitian_part(M))[:, 0]
    k = int(np.argmin(vals))
    return float(vals[k]), psi[k]


def is_strictly_positive(channel, restarts=64, seed=0):
    """Return ``(flag, a)`` with ``a`` the minimum over pure inputs of the least output eigenvalue."""
    a, _ = min_output_eigenvalue(channel, restarts=restarts, seed=seed)
    a = max(a, 0.0)
    return a > 1e-9, a


def is_bistochastic(channel, tol=1e-9):
    d = channel.d
    return bool(np.linalg.norm(channel(np.eye(d)) - np.eye(d), 2) <= tol)


# -- serialisation ---------------------------------------------------------------------


def _encode_matrix(M):
    return [[float(z.real), float(z.imag)] for z in np.asarray(M, dtype=complex).ravel()]


def _decode_matrix(entries, d):
    arr = np.array([complex(re, im) for re, im in entries], dtype=complex)
    if arr.size != d * d:
        raise ChannelError(f"matrix has {arr.size} entries, expected {d * d}")
    return arr.reshape(d, d)


def channel_to_json(channel):
    return {"d": channel.d, "kraus": [_encode_matrix(K) for K in channel.kraus]}


def channel_from_json(obj):
    """Decode ``{"d", "kraus"}`` or a named spec ``{"kind": ..., params}``."""
    if "kraus" in obj:
        d = int(obj["d"])
        return QuantumChannel.from_kraus([_decode_matrix(K, d) for K in obj["kraus"]])
    if "kind" in obj:
        params = {k: v for k, v in obj.items() if k != "kind"}
        for key in ("U", "tau"):
            if key in params and not isinstance(params[key], np.ndarray):
                raw = params[key]
                side = int(round(np.sqrt(len(raw))))
                params[key] = _decode_matrix(raw, side)
        return make_named(obj["kind"], **params)
    raise ChannelError("channel spec needs either 'kraus' or 'kind'")


def channel_spec(channel):
    """Named spec when the channel carries a label, Kraus JSON otherwise."""
    if channel.label is None:
        return channel_to_json(channel)
    spec = {}
    for key, value in channel.label.items():
        spec[key] = _encode_matrix(value) if isinstance(value, np.ndarray) else value
    return spec


def encode_matrix(M):
    return _encode_matrix(M)


def decode_matrix(entries, d):
    return _decode_matrix(entries, d)


__all__ = [
    "ChannelError",
    "QuantumChannel",
    "PAULIS",
    "apply",
    "apply_superop",
    "amplitude_damping",
    "bit_swap",
    "channel_from_json",
    "channel_spec",
    "channel_to_json",
    "choi_to_kraus",
    "choi_to_superop",
    "compose",
    "compose_all",
    "dagger",
    "dephasing_x",
    "dephasing_z",
    "depolarizing",
    "from_kraus",
    "identity_channel",
    "is_bistochastic",
    "is_strictly_positive",
    "kraus_to_superop",
    "linear_combination",
    "make_named",
    "min_output_eigenvalue",
    "pure_outputs",
    "random_channel",
    "replacement_channel",
    "superop_to_choi",
    "unitary_channel",
    "werner_holevo_like",
]
