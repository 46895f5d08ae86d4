"""Deterministic inhomogeneous channel sequences and their window products.

Time runs forward: the window product over ``[s, t)`` is
``Phi_{t:s} = Phi_{t-1} o ... o Phi_s`` with ``Phi_{s:s}`` the identity.
Products are accumulated as superoperator matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .channels import (
    QuantumChannel,
    channel_from_json,
    channel_spec,
    identity_channel,
    superop_to_choi,
    choi_to_superop,
)
from .contraction import (
    EXACT,
    ContractionReport,
    kappa_tr,
    kappa_upper_aggregate,
    replacement_distance,
)
from .linalg import check_density_matrix, hermitian_part, projector, trace_norm, vec, unvec

CHOI_DRIFT_TOL = 1e-8


class ChannelSequence:
    """An indexed family ``Phi_n`` of channels on a common dimension.

    Either ``channels`` (an explicit list, ``channels[k]`` is ``Phi_{start+k}``)
    or ``rule`` (a pure function ``n -> QuantumChannel``) must be given.

    ``interval = (lo, hi)`` lists the indices ``lo <= n < hi`` where a channel
    is defined; ``None`` stands for an infinite end.  Window products
    ``Phi_{t:s}`` are admissible for ``lo <= s <= t <= hi``.
    """

    def __init__(self, channels=None, start=0, rule: Callable | None = None, interval=(None, None), d=None, description=None):
        if (channels is None) == (rule is None):
            raise ValueError("give exactly one of channels or rule")
        self._cache: dict[int, QuantumChannel] = {}
        self.description = description
        if channels is not None:
            channels = list(channels)
            if not channels:
                raise ValueError("empty channel list")
            self.interval = (int(start), int(start) + len(channels))
            for k, ch in enumerate(channels):
                self._cache[int(start) + k] = ch
            self._rule = None
            self.d = channels[0].d
            if any(ch.d != self.d for ch in channels):
                raise ValueError("all channels in a sequence must share one dimension")
        else:
            self._rule = rule
            self.interval = tuple(interval)
            lo = self.interval[0]
            self.d = int(d) if d is not None else rule(0 if lo is None else lo).d

    def contains(self, n):
        lo, hi = self.interval
        return (lo is None or n >= lo) and (hi is None or n < hi)

    def _check_window(self, s, t):
        lo, hi = self.interval
        if s > t:
            raise ValueError(f"window [{s}, {t}) is reversed")
        if (lo is not None and s < lo) or (hi is not None and t > hi):
            raise IndexError(f"window [{s}, {t}) leaves the index interval {self.interval}")

    def __getitem__(self, n):
        n = int(n)
        if not self.contains(n):
            raise IndexError(f"index {n} outside {self.interval}")
        if n not in self._cache:
            ch = self._rule(n)
            if ch.d != self.d:
                raise ValueError(f"channel at {n} has dimension {ch.d}, expected {self.d}")
            self._cache[n] = ch
        return self._cache[n]

    def __len__(self):
        lo, hi = self.interval
        if lo is None or hi is None:
            raise TypeError("sequence is unbounded")
        return hi - lo

    # -- construction helpers ----------------------------------------------------------

    @classmethod
    def constant(cls, channel, interval=(None, None)):
        seq = cls(rule=lambda n: channel, interval=interval, d=channel.d)
        seq.description = {"rule": "periodic", "channels": [channel_spec(channel)]}
        return seq

    @classmethod
    def periodic(cls, channels, interval=(None, None), offset=0):
        """``Phi_n = channels[(n - offset) mod k]``."""
        channels = list(channels)
        k = len(channels)
        seq = cls(rule=lambda n: channels[(n - offset) % k], interval=interval, d=channels[0].d)
        seq.description = {"rule": "periodic", "offset": offset, "channels": [channel_spec(c) for c in channels]}
        return seq


def _resymmetrise(S):
    J = hermitian_part(superop_to_choi(S))
    return choi_to_superop(J)


def _accumulate(seq, s, t):
    d = seq.d
    S = np.eye(d * d, dtype=complex)
    for n in range(s, t):
        S = seq[n].superop @ S
    return S


def window_product(seq, s, t):
    """``Phi_{t:s} = Phi_{t-1} o ... o Phi_s`` (identity when ``s == t``)."""
    seq._check_window(s, t)
    if s == t:
        return identity_channel(seq.d)
    S = _accumulate(seq, s, t)
    ch = QuantumChannel(S, validate=False)
    if ch.tp_defect() > CHOI_DRIFT_TOL or ch.cp_defect() > CHOI_DRIFT_TOL:
        ch = QuantumChannel(_resymmetrise(S), validate=False)
    return ch


def window_kappa(seq, s, t, **kwargs):
    """``kappa_tr(Phi_{t:s})``; keyword arguments go to :func:`kappa_tr`."""
    return kappa_tr(window_product(seq, s, t), **kwargs)


# -- pullback boundary states -----------------------------------------------------------


@dataclass
class PullbackBoundary:
    """Limit candidate ``rho_t = lim Phi_{t:t-n}(tau)``.

    ``residual`` is the trace distance between the last two iterates;
    ``kappa`` is ``kappa_tr(Phi_{t:t-depth})`` at the last check, so
    ``2 kappa`` bounds the distance of the iterate to any other pullback of
    depth ``depth_used``.  ``stop_reason`` is ``"cauchy"``, ``"kappa"`` or
    ``"max_depth"``.
    """

    t: int
    rho_t: np.ndarray
    depth_used: int
    residual: float
    kappa: float
    converged: bool
    stop_reason: str
    history: list = field(default_factory=list)

    @property
    def certified(self):
        """Memory loss was observed: ``2 kappa`` is within the tolerance."""
        return self.stop_reason == "kappa"


def pullback_boundary(seq, t, tau=None, tol=1e-10, max_depth=4096, rule="dual", kappa_every=8, **kappa_kwargs):
    """Transport ``tau`` from the past: ``rho^(n) = Phi_{t:t-n}(tau)``.

    Parameters
    ----------
    seq : ChannelSequence
        Must be defined on ``[t - max_depth, t)`` (or as deep as reachable).
    tau : ndarray, optional
        Reference state, ``I/d`` by default.
    rule : {"dual", "kappa"}
        ``dual`` stops on the Cauchy criterion ``||rho^(n) - rho^(n-1)||_1 <= tol``
        or on ``2 kappa_tr(Phi_{t:t-n}) <= tol``; ``kappa`` uses only the
        second.  ``kappa`` is evaluated every ``kappa_every`` depths.
    """
    d = seq.d
    tau = np.eye(d, dtype=complex) / d if tau is None else check_density_matrix(tau, "tau")
    if rule not in ("dual", "kappa"):
        raise ValueError("rule must be 'dual' or 'kappa'")
    lo = seq.interval[0]
    depth_cap = max_depth if lo is None else min(max_depth, t - lo)
    if depth_cap < 1:
        raise IndexError(f"no channels below t = {t}")
    P = np.eye(d * d, dtype=complex)
    v_tau = vec(tau)
    prev = tau
    history = []
    kappa = 1.0
    residual = np.inf
    reason = "max_depth"
    n = 0
    for n in range(1, depth_cap + 1):
        P = P @ seq[t - n].superop
        rho = unvec(P @ v_tau, d)
        residual = trace_norm(rho - prev)
        prev = rho
        history.append(residual)
        cauchy = rule == "dual" and residual <= tol
        if cauchy or n % kappa_every == 0 or n == depth_cap:
            kappa = kappa_tr(QuantumChannel(P, validate=False), **kappa_kwargs).value
            if 2 * kappa <= tol:
                reason = "kappa"
                break
        if cauchy:
            reason = "cauchy"
            break
    rho = hermitian_part(prev)
    return PullbackBoundary(
        t=t,
        rho_t=rho,
        depth_used=n,
        residual=float(residual),
        kappa=float(kappa),
        converged=reason != "max_depth",
        stop_reason=reason,
        history=history,
    )


def pullback_consistency(seq, t, tau=None, tol=1e-10, **kwargs):
    """``||rho_{t+1} - Phi_t(rho_t)||_1`` for the two pullback candidates; must be ``<= 3 tol``."""
    a = pullback_boundary(seq, t, tau, tol, **kwargs)
    b = pullback_boundary(seq, t + 1, tau, tol, **kwargs)
    gap = trace_norm(b.rho_t - seq[t](a.rho_t))
    return gap, gap <= 3 * tol


# -- forward replacement ----------------------------------------------------------------


@dataclass
class ForwardReplacementReport:
    kappa: ContractionReport
    dist: float
    sandwich_ok: bool
    drift: float
    drift_ok: bool

    @property
    def ok(self):
        return self.sandwich_ok and self.drift_ok


def forward_replacement_check(seq, s, t, tau=None, tau_prime=None, slack=1e-6, **kwargs):
    """Compare ``Phi_{t:s}`` with its replacement family ``X -> tr(X) Phi_{t:s}(tau)``.

    Checks ``kappa <= ||Phi - R^(tau)||_{1->1} <= 4 kappa`` and the center
    drift ``||Phi_{t:s}(tau) - Phi_{t:s}(tau')||_1 <= 2 kappa``.  The second
    reference ``tau'`` defaults to a pure state from the kappa witness, which
    is where the drift bound is tight.
    """
    d = seq.d
    tau = np.eye(d, dtype=complex) / d if tau is None else check_density_matrix(tau, "tau")
    prod = window_product(seq, s, t)
    kap = kappa_tr(prod, **kwargs)
    rd = replacement_distance(prod, tau, kappa=kap)
    if tau_prime is None:
        tau_prime = projector(kap.witness[0]) if kap.witness is not None else projector(np.eye(d)[0])
    drift = trace_norm(prod(tau) - prod(tau_prime))
    kmax = kap.upper_or_value
    sandwich = kap.value - slack <= rd.dist <= 4 * kmax + slack
    return ForwardReplacementReport(kap, rd.dist, bool(sandwich), float(drift), bool(drift <= 2 * kmax + slack))


# -- rate clocks --------------------------------------------------------------------------


class ClockBound(NamedTuple):
    product_bound: float
    exp_bound: float
    threshold_bound: float
    G_r: int


def contraction_clock_bound(a, r):
    """Clocks for per-step bounds ``kappa_tr(Phi_j) <= 1 - a_j``.

    Returns ``prod(1 - a_j)``, ``exp(-sum a_j)``, ``(1 - r)**G_r`` and the
    count ``G_r`` of steps with ``a_j >= r``.
    """
    a = np.asarray(a, dtype=float)
    if np.any((a < 0) | (a > 1)) or not np.all(np.isfinite(a)):
        raise ValueError("one-step bounds a_j must lie in [0, 1]")
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    prod = float(np.prod(1 - a))
    expb = float(np.exp(-np.sum(a)))
    G = int(np.sum(a >= r))
    assert prod <= expb * (1 + 1e-12)
    return ClockBound(prod, expb, float((1 - r) ** G), G)


@dataclass
class GoodBlockReport:
    holds: bool
    bound: float
    kappa_window: float | None
    consistent: bool | None
    uncertified_blocks: int
    failing_window: int | None = None


def _block_kappa_upper(prod):
    """Certified upper bound when cheap, else the optimised value and a caveat flag."""
    rep = kappa_tr(prod)
    if rep.mode == EXACT:
        return rep.value, True
    up = kappa_upper_aggregate(prod, use_md=False).value
    if up <= rep.value + 1e-12:
        return up, True
    return rep.value, False


def good_block_bound(seq, s, t, ell, M, q):
    """Check the uniform ``(ell, M, q)`` good-block condition on ``[s, t)``.

    Every window ``[r, r + M)`` inside ``[s, t)`` must contain a length-``ell``
    block with ``kappa <= q``.  When it does, ``bound = q**floor((t - s) / M)``
    and ``kappa_{t:s} <= bound + 1e-4`` is checked.  Blocks judged only by an
    optimised lower bound (``d >= 3`` without a matching certificate) are
    counted in ``uncertified_blocks``.
    """
    if not (1 <= ell <= M):
        raise ValueError("need 1 <= ell <= M")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    seq._check_window(s, t)
    cache: dict[int, tuple[float, bool]] = {}

    def block(u):
        if u not in cache:
            cache[u] = _block_kappa_upper(window_product(seq, u, u + ell))
        return cache[u]

    uncertified = 0
    for r in range(s, t - M + 1):
        found = False
        for u in range(r, r + M - ell + 1):
            val, cert = block(u)
            if val <= q:
                found = True
                uncertified += 0 if cert else 1
                break
        if not found:
            return GoodBlockReport(False, 1.0, None, None, uncertified, failing_window=r)
    bound = q ** ((t - s) // M)
    kw = window_kappa(seq, s, t).value
    return GoodBlockReport(True, float(bound), float(kw), bool(kw <= bound + 1e-4), uncertified)


# -- serialisation ------------------------------------------------------------------------


def sequence_to_json(seq):
    """``{"d", "interval", "channels"}`` for finite lists, rule form otherwise."""
    lo, hi = seq.interval
    if seq._rule is None:
        return {"d": seq.d, "interval": [lo, hi], "channels": [channel_spec(seq[n]) for n in range(lo, hi)]}
    if seq.description is None:
        raise ValueError("rule-backed sequence has no serialisable description")
    return {"d": seq.d, "interval": [lo, hi], **seq.description}


def sequence_from_json(obj):
    lo, hi = obj.get("interval", [None, None])
    if "rule" in obj:
        if obj["rule"] != "periodic":
            raise ValueError(f"unknown sequence rule {obj['rule']!r}")
        chans = [channel_from_json(c) for c in obj["channels"]]
        return ChannelSequence.periodic(chans, interval=(lo, hi), offset=int(obj.get("offset", 0)))
    chans = [channel_from_json(c) for c in obj["channels"]]
    seq = ChannelSequence(chans, start=0 if lo is None else int(lo))
    if hi is not None and seq.interval[1] != int(hi):
        raise ValueError(f"interval {obj['interval']} does not match {len(chans)} channels")
    return seq


def random_sequence(d, length, seed, kraus_rank=2, start=0):
    """Explicit list of independent random channels (test instances)."""
    from .channels import random_channel

    ss = np.random.SeedSequence(seed)
    seeds = [int(c.generate_state(1)[0]) for c in ss.spawn(length)]
    return ChannelSequence([random_channel(d, kraus_rank, sd) for sd in seeds], start=start)


__all__ = [
    "ChannelSequence",
    "ClockBound",
    "ForwardReplacementReport",
    "GoodBlockReport",
    "PullbackBoundary",
    "contraction_clock_bound",
    "forward_replacement_check",
    "good_block_bound",
    "pullback_boundary",
    "pullback_consistency",
    "random_sequence",
    "sequence_from_json",
    "sequence_to_json",
    "window_kappa",
    "window_product",
]
