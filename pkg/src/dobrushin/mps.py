"""Inhomogeneous matrix product states in left-canonical gauge.

Sites are numbered from 1.  Site ``n`` carries tensors ``K_i^[n]`` (``i = 1..d_K``)
of size ``D_H x D_H`` with ``sum_i K_i^* K_i = I``, so the transfer map
``Phi_n(rho) = sum_i K_i rho K_i^*`` is a channel on the bond space.
Internally ``chain.tensor(n)`` has shape ``(d_K, D_H, D_H)``.

Multi-site observables act on ``C^{d_K} (x) ... (x) C^{d_K}`` with the
leftmost site as the most significant tensor factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channels import QuantumChannel, channel_from_json, decode_matrix, encode_matrix, kraus_to_superop
from .cocycle import (
    annealed_mean_kappa,
    extended_log,
    extended_mean,
    sample_fiber,
)
from .contraction import kappa_tr
from .linalg import op_norm, trace_norm, unvec, vec
from .products import ChannelSequence, pullback_boundary

CANONICAL_TOL = 1e-9
DENSE_CAP = 1 << 20
ZERO_NORM = 1e-12


class DegenerateStateError(ValueError):
    """Raised when the trace-closed finite-volume vector has zero norm."""


@dataclass
class LocalObservable:
    """Matrix ``X`` acting on sites ``start..start + k - 1`` (``d_K**k`` rows)."""

    matrix: np.ndarray
    start: int = 1

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("observable must be a square matrix")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("observable has non-finite entries")
        if self.start < 1:
            raise ValueError("sites are numbered from 1")

    def sites(self, d_K):
        side = self.matrix.shape[0]
        k = int(round(math.log(side, d_K))) if d_K > 1 else 1
        if d_K ** k != side:
            raise ValueError(f"observable side {side} is not a power of d_K = {d_K}")
        return self.start, self.start + k - 1

    @property
    def norm(self):
        return op_norm(self.matrix)


class MpsChain:
    """Site-indexed left-canonical tensors.

    Parameters
    ----------
    sites : list of ndarray, optional
        ``sites[n - 1]`` has shape ``(d_K, D_H, D_H)``.
    rule : callable, optional
        ``n -> tensor`` for chains without a stored list; ``n_max`` may then be
        ``None`` (unbounded).
    """

    def __init__(self, sites=None, rule: Callable | None = None, n_max=None, validate=True):
        if (sites is None) == (rule is None):
            raise ValueError("give exactly one of sites or rule")
        self._tensors: dict[int, np.ndarray] = {}
        self._superops: dict[int, np.ndarray] = {}
        self._rule = rule
        self._validate = validate
        if sites is not None:
            sites = [np.asarray(T, dtype=complex) for T in sites]
            if not sites:
                raise ValueError("empty chain")
            for n, T in enumerate(sites, start=1):
                self._tensors[n] = self._check(T, n)
            self.n_max = len(sites)
            first = sites[0]
        else:
            self.n_max = n_max
            first = self._check(np.asarray(rule(1), dtype=complex), 1)
            self._tensors[1] = first
        self.d_K, self.D_H = first.shape[0], first.shape[1]

    def _check(self, T, n):
        if T.ndim != 3 or T.shape[1] != T.shape[2]:
            raise ValueError(f"site {n}: tensor must have shape (d_K, D, D), got {T.shape}")
        if hasattr(self, "d_K") and T.shape != (self.d_K, self.D_H, self.D_H):
            raise ValueError(f"site {n}: tensor shape {T.shape} differs from the chain")
        if self._validate:
            defect = np.linalg.norm(np.einsum("iab,iac->bc", T.conj(), T) - np.eye(T.shape[1]), 2)
            if defect > CANONICAL_TOL:
                raise ValueError(f"site {n} violates the left-canonical condition (defect {defect:.2e})")
        return T

    def tensor(self, n):
        if n < 1 or (self.n_max is not None and n > self.n_max):
            raise IndexError(f"site {n} outside 1..{self.n_max}")
        if n not in self._tensors:
            self._tensors[n] = self._check(np.asarray(self._rule(n), dtype=complex), n)
        return self._tensors[n]

    def superop(self, n):
        if n not in self._superops:
            self._superops[n] = kraus_to_superop(self.tensor(n))
        return self._superops[n]

    # -- constructors

    @classmethod
    def from_channels(cls, channels):
        """Sites from channels whose stored Kraus families are the tensors."""
        return cls([np.array(ch.kraus) for ch in channels])

    @classmethod
    def constant(cls, tensor, n_max=None):
        T = np.asarray(tensor, dtype=complex)
        return cls(rule=lambda n: T, n_max=n_max)

    @classmethod
    def random(cls, d_K, D_H, n_max, seed):
        """Independent Haar-isometry tensors ``C^D -> C^{d_K D}`` cut into ``d_K`` blocks."""
        from .linalg import haar_isometry

        rng = np.random.default_rng(seed)
        sites = []
        for _ in range(n_max):
            V = haar_isometry(rng, d_K * D_H, D_H)
            sites.append(V.reshape(d_K, D_H, D_H))
        return cls(sites)

    @classmethod
    def from_fiber(cls, traj):
        """``K^[n](omega) = K(theta^{-n} omega)``: site ``n`` uses the fiber channel at time ``-n``."""
        return cls([np.array(traj[-n].kraus) for n in range(1, traj.N + 1)])

    def reversed_sequence(self):
        """Sequence with ``Phi~_{-j} = Phi_j`` so that ``Theta_{m,n} = Phi~_{-m:-n}``."""
        lo = None if self.n_max is None else -self.n_max
        return ChannelSequence(rule=lambda j: self.transfer_channel(-j), interval=(lo, 0), d=self.D_H)

    def transfer_channel(self, n):
        return transfer_channel(self, n)


# -- transfer maps ------------------------------------------------------------------------


def transfer_channel(chain, n):
    """``Phi_n(rho) = sum_i K_i^[n] rho K_i^[n]*`` as a channel (Kraus family = site tensors)."""
    return QuantumChannel(chain.superop(n), kraus=list(chain.tensor(n)), validate=False)


def _theta_superop(chain, m, n):
    if not 0 <= m <= n:
        raise IndexError(f"need 0 <= m <= n, got m = {m}, n = {n}")
    D = chain.D_H
    S = np.eye(D * D, dtype=complex)
    for k in range(m + 1, n + 1):
        S = S @ chain.superop(k)
    return S


def theta_product(chain, m, n):
    """``Theta_{m,n} = Phi_{m+1} o ... o Phi_n`` (identity when ``m == n``)."""
    return QuantumChannel(_theta_superop(chain, m, n), validate=False)


def block_tensor(chain, a, b):
    """Products ``K_{i_a}^[a] ... K_{i_b}^[b]`` for all multi-indices, shape ``(d_K**(b-a+1), D, D)``."""
    W = chain.tensor(a)
    for n in range(a + 1, b + 1):
        T = chain.tensor(n)
        W = np.einsum("iab,jbc->ijac", W, T).reshape(-1, chain.D_H, chain.D_H)
    return W


def block_isometry(chain, a, b):
    """``V_[a,b] = sum_I |I> (x) K_I`` as a ``(d_K**L D) x D`` matrix; ``V^* V = I`` in canonical gauge."""
    W = block_tensor(chain, a, b)
    return W.reshape(-1, chain.D_H)


def inserted_transfer(chain, X):
    """Superoperator of ``Y -> sum_{i,j} <i|X|j> K_j Y K_i^*`` on the support of ``X``."""
    a, b = X.sites(chain.d_K)
    W = block_tensor(chain, a, b)
    D = chain.D_H
    S = np.einsum("ij,iab,jcd->acbd", X.matrix, W.conj(), W)
    return S.reshape(D * D, D * D)


def superoperator_trace(L):
    """``Tr_sup(L) = sum_{ab} tr(E_ab^* L(E_ab))``, the trace of the superoperator matrix."""
    L = L.superop if isinstance(L, QuantumChannel) else np.asarray(L)
    return complex(np.trace(L))


# -- finite volume ------------------------------------------------------------------------


def finite_volume_vector(chain, n):
    """Coefficients ``tr(K_{i_1} ... K_{i_n})`` of the trace-closed MPS on ``n`` sites."""
    if chain.d_K ** n > DENSE_CAP:
        raise ValueError(f"d_K**n = {chain.d_K ** n} exceeds the dense cap {DENSE_CAP}")
    W = block_tensor(chain, 1, n)
    return np.einsum("iaa->i", W)


def finite_volume_norm(chain, n):
    """``<Psi_n|Psi_n> = Tr_sup(Theta_{0,n})``."""
    return superoperator_trace(_theta_superop(chain, 0, n))


def finite_volume_expectation(chain, X, n, method="transfer"):
    """``phi_n(X) = <Psi_n| X (x) I |Psi_n> / <Psi_n|Psi_n>`` for ``X`` supported in ``[1, n]``."""
    a, b = X.sites(chain.d_K)
    if a != 1:
        X = _pad_left(X, chain.d_K)
        a, b = 1, X.sites(chain.d_K)[1]
    if b > n:
        raise ValueError(f"observable support [1, {b}] exceeds n = {n}")
    if method == "dense":
        psi = finite_volume_vector(chain, n)
        Z = float(np.real(np.vdot(psi, psi)))
        if abs(Z) <= ZERO_NORM:
            raise DegenerateStateError(f"<Psi_{n}|Psi_{n}> = {Z:.3e} vanishes")
        Psi = psi.reshape(chain.d_K ** b, -1)
        return complex(np.vdot(Psi, X.matrix @ Psi) / Z)
    if method != "transfer":
        raise ValueError("method must be 'dense' or 'transfer'")
    tail = _theta_superop(chain, b, n)
    Z = superoperator_trace(_theta_superop(chain, 0, b) @ tail)
    if abs(Z) <= ZERO_NORM:
        raise DegenerateStateError(f"<Psi_{n}|Psi_{n}> = {abs(Z):.3e} vanishes")
    return superoperator_trace(inserted_transfer(chain, X) @ tail) / Z


def _pad_left(X, d_K):
    a, _ = X.sites(d_K)
    return LocalObservable(np.kron(np.eye(d_K ** (a - 1)), X.matrix), start=1)


# -- thermodynamic limit ------------------------------------------------------------------


def boundary_state(chain, r, tol=1e-12, max_depth=4096):
    """Right boundary ``rho_r = lim_n Theta_{r-1,n}(tau)`` via the reversed-sequence pullback."""
    return pullback_boundary(chain.reversed_sequence(), -(r - 1), tol=tol, max_depth=max_depth, rule="kappa")


def _boundary_failure(pb):
    if pb.kappa >= 1 - 1e-9:
        return f"no memory loss: kappa(Theta) = {pb.kappa:.3e} at depth {pb.depth_used}"
    return f"chain too short: kappa(Theta) = {pb.kappa:.3e} at depth {pb.depth_used}"


@dataclass
class LimitReport:
    """Local thermodynamic limit ``phi_inf(X) = tr X^_{[1,m]}(rho_{m+1})`` with finite-volume checks.

    ``history`` rows hold ``n``, ``Z`` (normalisation), ``phi``, ``error``
    ``= |phi_n - phi_inf|``, ``kappa = kappa_tr(Theta_{m,n})``, the two bounds
    and whether the rate bound applies (``4 D^2 kappa <= 1/2``).
    """

    phi_inf: complex | None
    rho: np.ndarray | None
    kappa_tail: float
    error_bound: float
    history: list = field(default_factory=list)
    boundary_residual: float | None = None
    predicted_depth: int | None = None
    ok: bool = False
    failure: str | None = None


def thermodynamic_limit(chain, X, tol=1e-12, max_n=None, target=1e-6, max_depth=4096):
    """Boundary-state limit of ``phi_n(X)`` and the ``16 D^2 ||X|| kappa`` rate checks.

    ``predicted_depth`` is the first ``n`` with ``16 D^2 ||X|| kappa(Theta_{m,n}) <= target``;
    the scan runs to at least that depth when the chain allows it.
    """
    if X.sites(chain.d_K)[0] != 1:
        X = _pad_left(X, chain.d_K)
    m = X.sites(chain.d_K)[1]
    D2 = chain.D_H ** 2
    xnorm = X.norm
    top = chain.n_max if chain.n_max is not None else m + max_depth
    pb = boundary_state(chain, m + 1, tol=tol, max_depth=min(max_depth, top - m))
    if not pb.certified:
        return LimitReport(None, None, pb.kappa, math.inf, failure=_boundary_failure(pb))
    rho = pb.rho_t
    Xhat = inserted_transfer(chain, X)
    phi_inf = complex(np.trace(unvec(Xhat @ vec(rho), chain.D_H)))
    residual = None
    if top - m - 1 >= 1:
        nxt = boundary_state(chain, m + 2, tol=tol, max_depth=min(max_depth, top - m - 1))
        if nxt.certified:
            residual = trace_norm(transfer_channel(chain, m + 1)(nxt.rho_t) - rho)

    n_end = top if max_n is None else min(max_n, top)
    n_end = min(n_end, m + pb.depth_used)
    head = _theta_superop(chain, 0, m)
    S = np.eye(D2, dtype=complex)
    history = []
    predicted = None
    ok = True
    kap = 1.0
    for n in range(m, n_end + 1):
        if n > m:
            S = S @ chain.superop(n)
        kap = kappa_tr(QuantumChannel(S, validate=False)).value
        Z = superoperator_trace(head @ S)
        applies = 4 * D2 * kap <= 0.5
        zb = 4 * D2 * kap
        pb_ = 16 * D2 * xnorm * kap
        if abs(Z) > ZERO_NORM:
            phi = superoperator_trace(Xhat @ S) / Z
            err = abs(phi - phi_inf)
        else:
            phi, err = None, None
        row_ok = abs(Z - 1) <= zb + 1e-10 and (not applies or (err is not None and err <= pb_ + 1e-10))
        ok &= row_ok
        history.append({"n": n, "Z": Z, "phi": phi, "error": err, "kappa": kap,
                        "z_bound": zb, "phi_bound": pb_, "bound_applies": applies, "ok": row_ok})
        if predicted is None and applies and pb_ <= target:
            predicted = n
            if max_n is None:
                break
    if residual is not None and residual > 3 * tol:
        ok = False
    return LimitReport(phi_inf, rho, kap, 16 * D2 * xnorm * kap, history, residual, predicted, ok)


@dataclass
class CorrelationCheck:
    connected_corr: float
    bound: float
    passed: bool
    phi_ab: complex
    phi_a: complex
    phi_b: complex
    kappa_gap: float


def correlation_bound_check(chain, A, B, tol=1e-12, max_depth=4096):
    """``|phi(AB) - phi(A) phi(B)| <= 4 ||A|| ||B|| kappa(Theta_{q,r-1})`` from boundary formulas."""
    p, q = A.sites(chain.d_K)
    r, s = B.sites(chain.d_K)
    if not q + 1 < r:
        raise ValueError(f"supports [{p}, {q}] and [{r}, {s}] need a gap of at least one site")
    D = chain.D_H
    top = chain.n_max if chain.n_max is not None else s + max_depth
    pb = boundary_state(chain, s + 1, tol=tol, max_depth=min(max_depth, top - s))
    if not pb.certified:
        raise ValueError(f"boundary right of site {s} not certified, {_boundary_failure(pb)}")
    rho = vec(pb.rho_t)
    gap = _theta_superop(chain, q, r - 1)
    Ahat = inserted_transfer(chain, A)
    Bhat = inserted_transfer(chain, B)
    Ihat_B = _theta_superop(chain, r - 1, s)
    tr = lambda v: complex(np.trace(unvec(v, D)))
    phi_b = tr(Bhat @ rho)
    phi_a = tr(Ahat @ gap @ Ihat_B @ rho)
    phi_ab = tr(Ahat @ gap @ Bhat @ rho)
    conn = abs(phi_ab - phi_a * phi_b)
    kg = kappa_tr(QuantumChannel(gap, validate=False)).value
    bound = 4 * A.norm * B.norm * kg
    return CorrelationCheck(conn, bound, bool(conn <= bound + 1e-8), phi_ab, phi_a, phi_b, kg)


# -- random MPS ---------------------------------------------------------------------------


@dataclass
class RandomMpsReport:
    """Quenched and annealed summary over sampled fibers.

    ``lyapunov`` is the mean of ``(1/n) log kappa(Theta_{0,n})`` at ``n = n_lyap``
    and ``beta`` defaults to ``lyapunov / 2``.  ``fibers`` holds one row per
    fiber; ``tails`` holds, per gap ``L``, the frequency with which
    ``Gamma_{A,B}`` exceeds ``4 max(A, 1) ||A|| ||B|| e^{-gamma L}``
    (``gamma = eta / 2`` from the annealed fit) against the allowance
    ``e^{-gamma L}`` plus three binomial standard errors.
    """

    lyapunov: float
    lyapunov_stderr: float
    beta: float
    fibers: list
    tails: list
    annealed_A: float
    annealed_eta: float
    all_converged: bool
    quenched_ok: bool
    tails_ok: bool


def random_mps_experiment(base, m, X, n_max, samples, seed=None, gaps=range(1, 7), A=None, B=None,
                          tol=1e-10, n_lyap=20, beta=None, annealed_samples=400):
    """Per-fiber thermodynamic limits and clustering statistics for a random tensor environment.

    Site tensors are the stored Kraus families of the base channels with
    ``K^[n](omega) = K(theta^{-n} omega)``.  ``X`` acts on ``[1, m]``; ``A`` and
    ``B`` are single-site observables placed at sites ``1`` and ``L + 2``
    (default ``diag(1, -1, ..., -1)``).  ``n_max`` must leave room for the
    boundary pullbacks; fibers whose boundary is not certified are reported,
    not counted as exceedances.
    """
    seed = base.seed if seed is None else seed
    n_lyap = min(n_lyap, n_max)
    chains = [MpsChain.from_fiber(sample_fiber(base, seed, N=n_max, sample_index=i)) for i in range(samples)]
    logs = [float(extended_log(kappa_tr(theta_product(c, 0, n_lyap)).value)) / n_lyap for c in chains]
    lam, lam_se, _ = extended_mean(logs)
    if beta is None:
        beta = lam / 2

    fibers = []
    quenched_ok, converged = True, True
    for i, chain in enumerate(chains):
        rep = thermodynamic_limit(chain, X, tol=tol, max_n=n_max)
        row = {"sample": i, "converged": rep.failure is None, "phi_inf": rep.phi_inf,
               "rate_ok": rep.ok, "failure": rep.failure}
        converged &= rep.failure is None
        if rep.failure is None and beta < 0:
            # smallest C^- >= 1 with kappa(Theta_{m,n}) <= C^- e^{beta (n - m)} on the scanned range
            steps = np.array([h["n"] - m for h in rep.history])
            ks = np.array([h["kappa"] for h in rep.history])
            C_minus = max(1.0, float(np.max(ks * np.exp(-beta * steps)))) if np.isfinite(beta) else 1.0
            half = len(steps) // 2
            stable = not np.isfinite(beta) or np.argmax(ks * np.exp(-beta * steps)) < max(half, 1)
            scale = 16 * chain.D_H ** 2 * X.norm * C_minus
            under = all(h["error"] <= scale * math.exp(beta * (h["n"] - m)) + 1e-9
                        for h in rep.history if h["bound_applies"])
            row.update({"C_minus": C_minus, "C_minus_stable": bool(stable), "errors_under_rate": bool(under)})
            quenched_ok &= under and rep.ok
        else:
            quenched_ok = False
        fibers.append(row)

    d_K = chains[0].d_K
    sign = np.diag([1.0] + [-1.0] * (d_K - 1))
    A = np.asarray(sign if A is None else A, dtype=complex)
    B = np.asarray(sign if B is None else B, dtype=complex)
    gaps = [L for L in gaps if L + 2 <= n_max]
    fit = annealed_mean_kappa(base, gaps, samples=annealed_samples, seed=int(seed) + 1)
    eta = fit.eta
    ns = np.array([row[0] for row in fit.table], dtype=float)
    means = np.array([row[1] for row in fit.table])
    # smallest A with a_L <= A e^{-eta L} on the sampled gaps
    A_const = float(np.max(means * np.exp(eta * ns))) if np.isfinite(eta) else 1.0
    C = 4 * max(A_const, 1.0)
    gamma = eta / 2
    tails, tails_ok = [], True
    Aop = LocalObservable(A, 1)
    for L in gaps:
        values, uncertified = [], 0
        for chain in chains:
            try:
                values.append(correlation_bound_check(chain, Aop, LocalObservable(B, L + 2), tol=tol).connected_corr)
            except ValueError:
                uncertified += 1
        values = np.array(values)
        thresh = C * Aop.norm * op_norm(B) * math.exp(-gamma * L)
        allow = math.exp(-gamma * L)
        n_ok = max(len(values), 1)
        freq = float(np.mean(values > thresh)) if len(values) else math.nan
        slack = 3 * math.sqrt(allow * (1 - allow) / n_ok)
        ok = bool(len(values) and freq <= allow + slack)
        tails_ok &= ok
        tails.append({"L": L, "threshold": thresh, "frequency": freq, "allowance": allow, "stderr3": slack,
                      "ok": ok, "uncertified": uncertified,
                      "max_gamma": float(np.max(values)) if len(values) else math.nan})
    return RandomMpsReport(lam, lam_se, beta, fibers, tails, A_const, eta, converged, quenched_ok, tails_ok)


# -- serialisation ------------------------------------------------------------------------


def chain_to_json(chain):
    if chain.n_max is None:
        raise ValueError("only finite chains can be serialised")
    sites = [[encode_matrix(K) for K in chain.tensor(n)] for n in range(1, chain.n_max + 1)]
    return {"d_K": chain.d_K, "D_H": chain.D_H, "sites": sites}


def chain_from_json(obj):
    """Decode ``{"d_K", "D_H", "sites"}`` or a named form.

    Named forms: ``{"kind": "random", "d_K", "D_H", "n_max", "seed"}``,
    ``{"kind": "constant", "channel": spec, "n_max"}`` (site tensors are the
    channel's Kraus family) and ``{"kind": "channels", "channels": [specs]}``.
    """
    kind = obj.get("kind")
    if kind == "random":
        return MpsChain.random(int(obj["d_K"]), int(obj["D_H"]), int(obj["n_max"]), obj["seed"])
    if kind == "constant":
        ch = channel_from_json(obj["channel"])
        n_max = obj.get("n_max")
        return MpsChain.constant(np.array(ch.kraus), None if n_max is None else int(n_max))
    if kind == "channels":
        return MpsChain.from_channels([channel_from_json(c) for c in obj["channels"]])
    if kind is not None:
        raise ValueError(f"unknown chain kind {kind!r}")
    D = int(obj["D_H"])
    d_K = int(obj["d_K"])
    sites = []
    for n, site in enumerate(obj["sites"], start=1):
        if len(site) != d_K:
            raise ValueError(f"site {n} has {len(site)} tensors, expected d_K = {d_K}")
        sites.append(np.array([decode_matrix(K, D) for K in site]))
    return MpsChain(sites)


__all__ = [
    "CorrelationCheck",
    "DegenerateStateError",
    "LimitReport",
    "LocalObservable",
    "MpsChain",
    "RandomMpsReport",
    "block_isometry",
    "block_tensor",
    "boundary_state",
    "chain_from_json",
    "chain_to_json",
    "correlation_bound_check",
    "finite_volume_expectation",
    "finite_volume_norm",
    "finite_volume_vector",
    "inserted_transfer",
    "random_mps_experiment",
    "superoperator_trace",
    "theta_product",
    "thermodynamic_limit",
    "transfer_channel",
]
