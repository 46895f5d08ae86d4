"""Random channel environments, sampled fibers and trace-Dobrushin exponents.

A base describes the law of the stationary channel process ``X_j = Phi_{theta^j omega}``:

* ``deterministic``: one channel at every time;
* ``iid``: independent draws from weighted atoms, or from a sampler callable;
* ``markov``: a stationary finite-state Markov chain over channel atoms.

One fiber is a two-sided window ``[-N, N]`` of the process.  Random streams
are derived from ``SeedSequence([seed, sample_index, side])`` so that every
fiber is a deterministic function of ``(base, seed, sample_index, N)``; for
iid bases the draws at a fixed time do not depend on ``N``.

Logarithms follow the extended convention ``log 0 = -inf``; a mean over
values with any ``-inf`` entry is ``-inf`` and the count is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channels import (
    QuantumChannel,
    channel_from_json,
    channel_spec,
    is_bistochastic,
    is_strictly_positive,
    unitary_channel,
)
from .coefficients import alpha_md
from .contraction import induced_11_norm, kappa_tr, replacement_distance, s0
from .linalg import haar_isometry, haar_unitary, random_density_matrix, trace_norm, vec
from .products import ChannelSequence, pullback_boundary, window_product

ZERO_KAPPA = 1e-14
HS_CERT_TOL = 1e-12
Z95 = 1.959963984540054
SEED_MASK = (1 << 64) - 1


# -- extended logarithms ------------------------------------------------------------------


def extended_log(x, zero=ZERO_KAPPA):
    """``log x`` with values ``<= zero`` mapped to ``-inf``."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -np.inf)
    pos = x > zero
    out[pos] = np.log(x[pos])
    return out


def extended_mean(values):
    """Mean with the extended nonpositive convention; returns ``(mean, stderr, n_neg_inf)``."""
    v = np.asarray(values, dtype=float)
    n_inf = int(np.sum(np.isneginf(v)))
    if n_inf:
        return -np.inf, np.nan, n_inf
    if v.size < 2:
        return float(np.mean(v)), np.nan, 0
    return float(np.mean(v)), float(np.std(v, ddof=1) / np.sqrt(v.size)), 0


# -- environments -------------------------------------------------------------------------


def _rng(seed, *keys):
    return np.random.default_rng(np.random.SeedSequence([int(seed) & SEED_MASK, *[int(k) for k in keys]]))


def haar_unitary_sampler(d):
    def sample(rng):
        return unitary_channel(haar_unitary(rng, d))

    sample.spec = {"sampler": "haar_unitary", "d": d}
    return sample


def haar_isometry_sampler(d, kraus_rank):
    """Channels whose Kraus family is cut from a Haar isometry ``C^d -> C^{r d}``."""

    def sample(rng):
        V = haar_isometry(rng, kraus_rank * d, d)
        return QuantumChannel.from_kraus([V[i * d:(i + 1) * d] for i in range(kraus_rank)])

    sample.spec = {"sampler": "haar_isometry", "d": d, "kraus_rank": kraus_rank}
    return sample


_SAMPLERS = {
    "haar_unitary": lambda p: haar_unitary_sampler(int(p["d"])),
    "haar_isometry": lambda p: haar_isometry_sampler(int(p["d"]), int(p["kraus_rank"])),
}


@dataclass
class EnvironmentBase:
    """Law of a stationary channel environment.

    Use the constructors :meth:`deterministic`, :meth:`iid`,
    :meth:`iid_sampler` and :meth:`markov`.
    """

    kind: str
    d: int
    atoms: list = field(default_factory=list)
    weights: np.ndarray | None = None
    P: np.ndarray | None = None
    pi: np.ndarray | None = None
    sampler: Callable | None = None
    seed: int = 0

    @classmethod
    def deterministic(cls, channel, seed=0):
        return cls("deterministic", channel.d, atoms=[channel], weights=np.ones(1), seed=seed)

    @classmethod
    def iid(cls, atoms, weights=None, seed=0):
        atoms = list(atoms)
        w = np.full(len(atoms), 1.0 / len(atoms)) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (len(atoms),) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("iid weights must be a probability vector over the atoms")
        base = cls("iid", atoms[0].d, atoms=atoms, weights=w, seed=seed)
        base._check_dims()
        return base

    @classmethod
    def iid_sampler(cls, sampler, d, seed=0):
        return cls("iid", int(d), sampler=sampler, seed=seed)

    @classmethod
    def markov(cls, atoms, P, pi=None, seed=0):
        atoms = list(atoms)
        P = np.asarray(P, dtype=float)
        k = len(atoms)
        if P.shape != (k, k) or np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1)) > 1e-12:
            raise ValueError("P must be a row-stochastic matrix over the atoms")
        if pi is None:
            w, V = np.linalg.eig(P.T)
            v = np.real(V[:, np.argmin(np.abs(w - 1))])
            pi = v / v.sum()
        pi = np.asarray(pi, dtype=float)
        if np.any(pi < -1e-12) or abs(pi.sum() - 1) > 1e-12 or np.max(np.abs(pi @ P - pi)) > 1e-10:
            raise ValueError("pi must be a stationary distribution of P")
        base = cls("markov", atoms[0].d, atoms=atoms, P=P, pi=np.clip(pi, 0, None), seed=seed)
        base._check_dims()
        return base

    def _check_dims(self):
        if any(a.d != self.d for a in self.atoms):
            raise ValueError("all atoms must share one dimension")

    @property
    def finite(self):
        return self.sampler is None

    # -- serialisation

    def to_json(self):
        out = {"kind": self.kind, "d": self.d, "seed": int(self.seed)}
        if self.sampler is not None:
            spec = getattr(self.sampler, "spec", None)
            if spec is None:
                raise ValueError("sampler has no serialisable spec")
            out.update(spec)
            return out
        if self.kind == "markov":
            out["atoms"] = [{"channel": channel_spec(a)} for a in self.atoms]
            out["P"] = self.P.tolist()
        else:
            out["atoms"] = [{"channel": channel_spec(a), "weight": float(w)} for a, w in zip(self.atoms, self.weights)]
        return out

    @classmethod
    def from_json(cls, obj):
        kind = obj.get("kind")
        seed = int(obj.get("seed", 0))
        if kind not in ("deterministic", "iid", "markov"):
            raise ValueError(f"unknown base kind {kind!r}")
        if "sampler" in obj:
            if kind != "iid":
                raise ValueError("samplers are only available for iid bases")
            name = obj["sampler"]
            if name not in _SAMPLERS:
                raise ValueError(f"unknown sampler {name!r}")
            return cls.iid_sampler(_SAMPLERS[name](obj), obj["d"], seed=seed)
        atoms_json = obj.get("atoms")
        if not atoms_json:
            raise ValueError("base needs a non-empty 'atoms' list")
        atoms = [channel_from_json(a["channel"]) for a in atoms_json]
        if "d" in obj and any(a.d != int(obj["d"]) for a in atoms):
            raise ValueError("atom dimension does not match 'd'")
        if kind == "deterministic":
            return cls.deterministic(atoms[0], seed=seed)
        if kind == "iid":
            weights = [a.get("weight") for a in atoms_json]
            return cls.iid(atoms, None if any(w is None for w in weights) else weights, seed=seed)
        if "P" not in obj:
            raise ValueError("markov base needs a transition matrix 'P'")
        return cls.markov(atoms, obj["P"], obj.get("pi"), seed=seed)


# -- fibers -------------------------------------------------------------------------------


@dataclass
class CocycleTrajectory:
    """One sampled window ``X_j(omega)`` for ``-N <= j <= N``.

    ``atom_index[j + N]`` records the atom drawn at time ``j`` for finite bases.
    """

    base: EnvironmentBase
    seed: int
    sample_index: int
    N: int
    channels: list
    atom_index: np.ndarray | None = None

    def __getitem__(self, j):
        if not -self.N <= j <= self.N:
            raise IndexError(f"time {j} outside the sampled fiber [-{self.N}, {self.N}]")
        return self.channels[j + self.N]

    @property
    def sequence(self):
        return ChannelSequence(self.channels, start=-self.N)

    def _check_depth(self, n):
        if n < 0 or n > self.N:
            raise IndexError(f"depth {n} exceeds the sampled fiber (N = {self.N})")

    def forward_product(self, n):
        """``Phi_{omega; n:0} = X_{n-1} o ... o X_0``."""
        self._check_depth(n)
        return window_product(self.sequence, 0, n)

    def pullback_product(self, n):
        """``Phi_{omega; 0:-n} = X_{-1} o ... o X_{-n}``."""
        self._check_depth(n)
        return window_product(self.sequence, -n, 0)


def sample_fiber(base, seed=None, N=10, sample_index=0):
    """Materialise one two-sided fiber over ``[-N, N]``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    seed = base.seed if seed is None else seed
    if base.kind == "deterministic":
        return CocycleTrajectory(base, seed, sample_index, N, [base.atoms[0]] * (2 * N + 1), np.zeros(2 * N + 1, dtype=int))
    if base.kind == "iid":
        fwd, bwd = _rng(seed, sample_index, 0), _rng(seed, sample_index, 1)
        if base.sampler is not None:
            ahead = [base.sampler(fwd) for _ in range(N + 1)]
            behind = [base.sampler(bwd) for _ in range(N)]
            return CocycleTrajectory(base, seed, sample_index, N, behind[::-1] + ahead)
        k = len(base.atoms)
        ahead = fwd.choice(k, size=N + 1, p=base.weights)
        behind = bwd.choice(k, size=N, p=base.weights)
        idx = np.concatenate([behind[::-1], ahead])
    elif base.kind == "markov":
        rng = _rng(seed, sample_index, 2)
        k = len(base.atoms)
        idx = np.empty(2 * N + 1, dtype=int)
        idx[0] = rng.choice(k, p=base.pi)
        u = rng.random(2 * N)
        cum = np.cumsum(base.P, axis=1)
        for j in range(1, 2 * N + 1):
            idx[j] = min(int(np.searchsorted(cum[idx[j - 1]], u[j - 1], side="right")), k - 1)
    else:
        raise ValueError(f"invalid base kind {base.kind!r}")
    return CocycleTrajectory(base, seed, sample_index, N, [base.atoms[i] for i in idx], idx)


def _prefix_kappas(superops, **kappa_kwargs):
    """``kappa_tr`` of ``S_k ... S_1`` for every prefix length ``k``."""
    d = int(round(np.sqrt(superops[0].shape[0])))
    S = np.eye(d * d, dtype=complex)
    out = []
    for T in superops:
        S = T @ S
        out.append(kappa_tr(QuantumChannel(S, validate=False), **kappa_kwargs).value)
    return np.array(out)


def forward_kappa(traj, n, **kwargs):
    """``kappa_tr(Phi_{omega; n:0})`` as a :class:`ContractionReport`."""
    return kappa_tr(traj.forward_product(n), **kwargs)


def pullback_kappa(traj, n, **kwargs):
    """``kappa_tr(Phi_{omega; 0:-n})`` as a :class:`ContractionReport`."""
    return kappa_tr(traj.pullback_product(n), **kwargs)


def forward_kappa_curve(traj, n, **kwargs):
    traj._check_depth(n)
    return _prefix_kappas([traj[j].superop for j in range(n)], **kwargs)


def pullback_kappa_curve(traj, n, **kwargs):
    """``kappa_tr(Phi_{omega; 0:-k})`` for ``k = 1..n`` (new channels act first)."""
    traj._check_depth(n)
    d = traj.base.d
    S = np.eye(d * d, dtype=complex)
    out = []
    for k in range(1, n + 1):
        S = S @ traj[-k].superop
        out.append(kappa_tr(QuantumChannel(S, validate=False), **kwargs).value)
    return np.array(out)


# -- Lyapunov exponent --------------------------------------------------------------------


@dataclass
class LyapunovEstimate:
    """Monte Carlo estimate of ``(1/n) E[log kappa_n]``.

    ``kingman_curve`` lists ``(k, (1/k) mean log kappa_k)`` for ``k = 1..n``;
    ``neg_inf_count`` counts fibers with ``kappa_n = 0`` (then the estimate is
    ``-inf`` and ``exact_replacement`` tells whether every fiber hit zero).
    """

    n: int
    samples: int
    mean_log_kappa_over_n: float
    stderr: float
    ci_halfwidth: float
    kingman_curve: list
    neg_inf_count: int
    exact_replacement: bool
    per_sample: np.ndarray
    direction: str = "forward"


def lyapunov_estimate(base, n, samples, seed=None, direction="forward", **kappa_kwargs):
    """Estimate the trace-Dobrushin Lyapunov exponent from ``samples`` fibers of depth ``n``."""
    if n < 1 or samples < 1:
        raise ValueError("need n >= 1 and samples >= 1")
    seed = base.seed if seed is None else seed
    curve_fn = forward_kappa_curve if direction == "forward" else pullback_kappa_curve
    logs = np.empty((samples, n))
    for i in range(samples):
        traj = sample_fiber(base, seed, N=n, sample_index=i)
        logs[i] = extended_log(curve_fn(traj, n, **kappa_kwargs))
    curve = []
    for k in range(1, n + 1):
        m, _, _ = extended_mean(logs[:, k - 1])
        curve.append((k, m / k))
    last = logs[:, -1] / n
    mean, se, n_inf = extended_mean(last)
    half = Z95 * se if np.isfinite(se) else np.nan
    return LyapunovEstimate(
        n=n,
        samples=samples,
        mean_log_kappa_over_n=mean,
        stderr=se,
        ci_halfwidth=half,
        kingman_curve=curve,
        neg_inf_count=n_inf,
        exact_replacement=n_inf == samples,
        per_sample=last,
        direction=direction,
    )


# -- stationary random state --------------------------------------------------------------


@dataclass
class StationaryStateField:
    """Pullback state ``rho_omega`` at time 0 of one fiber, with stationarity checks.

    ``residual_chain[j] = ||X_j(rho_j) - rho_{j+1}||_1`` for ``j = 0..len-1``.
    When ``ok`` is false, ``failure`` explains why and ``kappa`` is the last
    pullback coefficient seen.
    """

    rho_at_zero: np.ndarray | None
    residual_chain: list
    depth_used: int
    kappa: float
    ok: bool
    spot_check_ok: bool | None = None
    failure: str | None = None


def stationary_state(traj, tol=1e-9, max_depth=None, tau=None, check_steps=4, spot_checks=8):
    """``rho_omega = lim Phi_{omega; 0:-n}(tau)``, stopping once ``2 kappa <= tol``.

    Pullbacks at times ``1..check_steps`` verify ``X_j(rho_j) = rho_{j+1}``
    within ``3 tol``; ``||Phi_{omega;0:-n}(sigma) - rho_omega||_1 <= 2 kappa``
    is spot-checked on random ``sigma``.
    """
    N = traj.N
    max_depth = N if max_depth is None else min(max_depth, N)
    check_steps = min(check_steps, N)
    seq = traj.sequence
    first = pullback_boundary(seq, 0, tau, tol, max_depth=max_depth, rule="kappa")
    if not first.certified:
        return StationaryStateField(
            None, [], first.depth_used, first.kappa, False,
            failure=f"no memory loss within depth {first.depth_used}: kappa = {first.kappa:.3e}",
        )
    rhos = [first.rho_t]
    for j in range(1, check_steps + 1):
        pb = pullback_boundary(seq, j, tau, tol, max_depth=max_depth + j, rule="kappa")
        if not pb.certified:
            return StationaryStateField(
                first.rho_t, [], first.depth_used, pb.kappa, False, failure=f"pullback at time {j} did not converge"
            )
        rhos.append(pb.rho_t)
    residuals = [trace_norm(traj[j](rhos[j]) - rhos[j + 1]) for j in range(check_steps)]
    rng = _rng(traj.seed, traj.sample_index, 3)
    prod = traj.pullback_product(first.depth_used)
    spot = all(
        trace_norm(prod(random_density_matrix(rng, traj.base.d)) - first.rho_t) <= 2 * first.kappa + 1e-12
        for _ in range(spot_checks)
    )
    ok = all(r <= 3 * tol for r in residuals) and spot
    return StationaryStateField(
        first.rho_t, residuals, first.depth_used, first.kappa, ok, spot_check_ok=spot,
        failure=None if ok else "stationarity residual above 3 tol",
    )


# -- quenched rates -----------------------------------------------------------------------


@dataclass
class QuenchedRateFit:
    """Truncated rate constants ``C_beta^{+/-}`` for one fiber.

    ``C_plus = max(1, max_{n <= n_max} e^{-beta n} kappa_{omega;n:0})`` and
    ``C_minus`` likewise for pullback products.  ``nonconvergent_*`` is set
    when the maximum sits in the second half of the range, i.e. the
    supremum is not yet resolved at depth ``n_max``.
    """

    beta: float
    n_max: int
    C_plus: float
    C_minus: float
    nonconvergent_plus: bool
    nonconvergent_minus: bool
    checks: list
    all_ok: bool
    kappa_forward: np.ndarray
    kappa_pullback: np.ndarray


def _rate_constant(kappas, beta):
    n = np.arange(1, len(kappas) + 1)
    scaled = np.exp(-beta * n) * kappas
    C = max(1.0, float(np.max(scaled)))
    k = int(np.argmax(scaled)) + 1
    nonconv = C > 1.0 and k > len(kappas) // 2
    return C, nonconv


def _distance_to_center(S, center, seed):
    L = S - np.outer(vec(center), vec(np.eye(center.shape[0])))
    return induced_11_norm(L, restarts=16, seed=seed).value


def quenched_rate_fit(traj, beta, n_max, check_points=6, rho=None, tol=1e-9):
    """Fit ``C_beta^{+/-}`` on a fiber and test the replacement-rate inequalities.

    At ``check_points`` depths ``n`` (geometrically spaced) it checks
    ``||Phi_{omega;n:0} - R_{theta^n omega}||_{1->1} <= 4 C_plus e^{beta n}`` and
    ``||Phi_{omega;0:-n} - R_omega||_{1->1} <= 4 C_minus e^{beta n}``, where the
    centers come from the stationary state of the fiber.  ``rho`` may supply
    ``rho_omega`` (otherwise :func:`stationary_state` is called).
    """
    if not beta < 0:
        raise ValueError("beta must be negative")
    traj._check_depth(n_max)
    kf = forward_kappa_curve(traj, n_max)
    kp = pullback_kappa_curve(traj, n_max)
    Cp, ncp = _rate_constant(kf, beta)
    Cm, ncm = _rate_constant(kp, beta)
    if rho is None:
        field_ = stationary_state(traj, tol=tol)
        rho = field_.rho_at_zero
    checks = []
    if rho is not None:
        ns = np.unique(np.geomspace(1, n_max, num=min(check_points, n_max)).round().astype(int))
        for n in ns:
            fwd = traj.forward_product(int(n))
            pull = traj.pullback_product(int(n))
            # forward center: rho_{theta^n omega} = Phi_{omega;n:0}(rho_omega)
            df = _distance_to_center(fwd.superop, fwd(rho), seed=int(n))
            dp = _distance_to_center(pull.superop, rho, seed=int(n))
            bf = 4 * Cp * math.exp(beta * n)
            bp = 4 * Cm * math.exp(beta * n)
            checks.append({"n": int(n), "forward": df, "forward_bound": bf, "pullback": dp, "pullback_bound": bp,
                           "ok": bool(df <= bf + 1e-8 and dp <= bp + 1e-8)})
    return QuenchedRateFit(beta, n_max, Cp, Cm, ncp, ncm, checks, bool(checks) and all(c["ok"] for c in checks), kf, kp)


# -- negative-exponent certificates ---------------------------------------------------------


@dataclass
class NegativeExponentCertificate:
    """Block criterion for ``lambda_tr < 0``.

    ``probability`` is the fraction of blocks judged contracting (kappa below
    ``1 - 1e-6``, ``epsilon > 0`` or ``a > 0`` depending on ``method``);
    ``mean_log`` is the extended mean of the block log-bound and
    ``implied_bound = mean_log / L`` bounds ``lambda_tr`` from above.
    ``certified`` means ``probability > 0`` (which suffices for an ergodic base).
    """

    method: str
    L: int
    samples: int
    probability: float
    mean_log: float
    implied_bound: float
    certified: bool
    neg_inf_count: int
    per_sample: np.ndarray


def certify_negative_exponent(base, L, samples, method="contracting_block", seed=None):
    """Sample blocks ``Phi_{omega; L:0}`` and evaluate one of three block criteria.

    ``contracting_block`` uses ``log kappa``; ``doeblin_block`` uses
    ``log(1 - epsilon)`` with ``epsilon`` the verified state-level minorisation
    mass; ``strict_positive_block`` uses ``log(1 - d a)`` with ``a`` the
    smallest output eigenvalue (``B = a I`` is a common lower bound).
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    if method not in ("contracting_block", "doeblin_block", "strict_positive_block"):
        raise ValueError(f"unknown method {method!r}")
    seed = base.seed if seed is None else seed
    cache = {}
    vals = np.empty(samples)
    good = np.zeros(samples, dtype=bool)
    for i in range(samples):
        traj = sample_fiber(base, seed, N=L, sample_index=i)
        key = tuple(traj.atom_index[traj.N:traj.N + L]) if traj.atom_index is not None else None
        if key is not None and key in cache:
            vals[i], good[i] = cache[key]
            continue
        block = traj.forward_product(L)
        if method == "contracting_block":
            k = kappa_tr(block).value
            res = (float(extended_log(k)), k < 1 - 1e-6)
        elif method == "doeblin_block":
            eps = alpha_md(block, sampled_upper=False).alpha
            res = (float(extended_log(1 - eps)), eps > 1e-9)
        else:
            flag, a = is_strictly_positive(block)
            res = (float(extended_log(max(1 - base.d * a, 0.0))), flag)
        if key is not None:
            cache[key] = res
        vals[i], good[i] = res
    mean, _, n_inf = extended_mean(vals)
    prob = float(np.mean(good))
    return NegativeExponentCertificate(method, L, samples, prob, mean, mean / L, prob > 0, n_inf, vals)


# -- annealed decay -----------------------------------------------------------------------


@dataclass
class AnnealedReport:
    """Monte Carlo ``a_n = E[kappa_{omega;n:0}]`` with an exponential fit ``A e^{-eta n}``.

    ``recursion`` rows test ``a_{r+s+t} <= a_r a_t + rho_s sqrt(a_r a_t)`` within
    three combined standard errors, with ``rho_s = 0`` for iid bases and
    ``2 sqrt(phi_s)`` for Markov bases.
    """

    table: list
    A: float
    eta: float
    eta_stderr: float
    recursion: list
    recursion_ok: bool


def _mixing_bound(base, s):
    """Upper bound on the maximal correlation ``rho_s`` of the environment."""
    if base.kind != "markov":
        return 0.0
    if s == 0:
        return 1.0
    return markov_mixing_profile(base, s)[-1][2]


def annealed_mean_kappa(base, n_list, samples, seed=None, recursion_pairs=None):
    """Estimate ``a_n`` for ``n`` in ``n_list`` from common fibers and fit the decay rate."""
    n_list = sorted({int(n) for n in n_list})
    if n_list[0] < 1:
        raise ValueError("depths must be positive")
    seed = base.seed if seed is None else seed
    n_top = n_list[-1]
    if recursion_pairs is None:
        recursion_pairs = [(r, 0, t) for r in n_list for t in n_list if r <= t]
    needed = sorted(set(n_list) | {r + s + t for r, s, t in recursion_pairs} | {r for r, _, _ in recursion_pairs}
                    | {t for _, _, t in recursion_pairs})
    n_top = max(needed)
    K = np.empty((samples, n_top))
    for i in range(samples):
        traj = sample_fiber(base, seed, N=n_top, sample_index=i)
        K[i] = forward_kappa_curve(traj, n_top)
    mean = K.mean(axis=0)
    se = K.std(axis=0, ddof=1) / np.sqrt(samples) if samples > 1 else np.full(n_top, np.nan)
    table = [(n, float(mean[n - 1]), float(se[n - 1])) for n in n_list]
    ns = np.array([n for n, m, _ in table if m > ZERO_KAPPA], dtype=float)
    ms = np.array([m for n, m, _ in table if m > ZERO_KAPPA])
    if len(ns) >= 2:
        coef, cov = np.polyfit(ns, np.log(ms), 1, cov=True) if len(ns) > 2 else (np.polyfit(ns, np.log(ms), 1), np.zeros((2, 2)))
        eta, A, eta_se = float(-coef[0]), float(np.exp(coef[1])), float(np.sqrt(max(cov[0, 0], 0.0)))
    elif len(ns) == 0:
        eta, A, eta_se = np.inf, 0.0, np.nan
    else:
        eta, A, eta_se = np.nan, np.nan, np.nan
    rows = []
    for r, s, t in recursion_pairs:
        ar, at, ast = mean[r - 1], mean[t - 1], mean[r + s + t - 1]
        rho_s = _mixing_bound(base, s)
        rhs = ar * at + rho_s * np.sqrt(ar * at)
        err = np.sqrt(se[r + s + t - 1] ** 2 + (at * se[r - 1]) ** 2 + (ar * se[t - 1]) ** 2)
        rows.append({"r": r, "s": s, "t": t, "lhs": float(ast), "rhs": float(rhs), "stderr": float(err),
                     "ok": bool(ast <= rhs + 3 * err + 1e-12)})
    return AnnealedReport(table, A, eta, eta_se, rows, all(r["ok"] for r in rows))


def markov_mixing_profile(base, m_max):
    """Rows ``(m, phi_m, 2 sqrt(phi_m))`` with ``phi_m = max_i ||P^m(i, .) - pi||_TV``."""
    if base.kind != "markov":
        raise ValueError("mixing profiles are defined for markov bases")
    rows = []
    Pm = np.eye(len(base.atoms))
    for m in range(1, m_max + 1):
        Pm = Pm @ base.P
        phi = float(np.max(0.5 * np.sum(np.abs(Pm - base.pi[None, :]), axis=1)))
        rows.append((m, phi, 2 * math.sqrt(phi)))
    return rows


# -- bistochastic Hilbert-Schmidt criterion -----------------------------------------------


@dataclass
class BistochasticHSReport:
    """Hilbert-Schmidt certificates for bistochastic environments.

    ``product_bound_ok`` is ``kappa_{omega;n:0} <= sqrt(d) prod_j s0(X_j)`` on
    every fiber; ``mean_log_s0`` and ``block_mean_log_s0`` (already divided
    by ``L``) are extended means; ``implied_bound`` is the smaller of the two.
    ``uniform_center_ok`` checks ``||Phi_{omega;n:0} - R_{I/d}||_{1->1} <= 4 kappa``
    on the first fibers when the bound is negative.
    """

    n: int
    samples: int
    L: int
    product_bound_ok: bool
    worst_product_gap: float
    mean_log_s0: float
    block_mean_log_s0: float
    block_neg_inf_count: int
    implied_bound: float
    certified: bool
    uniform_center_ok: bool | None


def bistochastic_hs_report(base, n, samples, L, seed=None, center_checks=4):
    seed = base.seed if seed is None else seed
    d = base.d
    step_logs, block_logs = [], []
    gaps = []
    centers = []
    for i in range(samples):
        traj = sample_fiber(base, seed, N=max(n, L), sample_index=i)
        steps = [traj[j] for j in range(n)]
        if not all(is_bistochastic(ch) for ch in steps):
            raise ValueError(f"fiber {i} contains a channel that is not bistochastic")
        # unital maps have s0 <= 1; clip rounding above it
        s_vals = np.minimum([s0(ch) for ch in steps], 1.0)
        step_logs.extend(extended_log(s_vals))
        prod = traj.forward_product(n)
        kap = kappa_tr(prod).value
        gaps.append(kap - math.sqrt(d) * float(np.prod(s_vals)))
        for b in range(n // L):
            blk = window_product(traj.sequence, b * L, (b + 1) * L)
            block_logs.append(float(extended_log(min(s0(blk), 1.0))))
        if i < center_checks:
            centers.append((prod, kap))
    m1, _, _ = extended_mean(step_logs)
    m2, _, ninf = extended_mean(block_logs) if block_logs else (0.0, np.nan, 0)
    m2 = m2 / L
    bound = min(m1, m2)
    # a product of exact ones can land a rounding error below zero
    certified = bound < -HS_CERT_TOL
    center_ok = None
    if certified:
        tau = np.eye(d, dtype=complex) / d
        center_ok = all(replacement_distance(p, tau, restarts=16).dist <= 4 * k + 1e-6 for p, k in centers)
    worst = float(max(gaps)) if gaps else 0.0
    return BistochasticHSReport(n, samples, L, worst <= 1e-9, worst, m1, m2, ninf, bound, certified, center_ok)


__all__ = [
    "AnnealedReport",
    "BistochasticHSReport",
    "CocycleTrajectory",
    "EnvironmentBase",
    "LyapunovEstimate",
    "NegativeExponentCertificate",
    "QuenchedRateFit",
    "StationaryStateField",
    "annealed_mean_kappa",
    "bistochastic_hs_report",
    "certify_negative_exponent",
    "extended_log",
    "extended_mean",
    "forward_kappa",
    "forward_kappa_curve",
    "haar_isometry_sampler",
    "haar_unitary_sampler",
    "lyapunov_estimate",
    "markov_mixing_profile",
    "pullback_kappa",
    "pullback_kappa_curve",
    "quenched_rate_fit",
    "sample_fiber",
    "stationary_state",
]
