"""Acceptance battery with pinned seeds and tolerances.

Each check returns a :class:`SuiteResult`; :func:`run_suite` runs a filtered
subset and writes ``suite_summary.csv``.  The same functions back
``tests/test_acceptance.py`` and ``dobrushin paper-suite``.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channels import (
    QuantumChannel,
    amplitude_damping,
    bit_swap,
    compose,
    dephasing_x,
    dephasing_z,
    depolarizing,
    is_strictly_positive,
    random_channel,
    unitary_channel,
    werner_holevo_like,
)
from .cocycle import (
    EnvironmentBase,
    annealed_mean_kappa,
    bistochastic_hs_report,
    haar_isometry_sampler,
    haar_unitary_sampler,
    lyapunov_estimate,
    sample_fiber,
    stationary_state,
)
from .coefficients import alpha_doeblin, alpha_md
from .contraction import diamond_witness, kappa_tr, s0
from .linalg import haar_isometry
from .mps import (
    LocalObservable,
    MpsChain,
    correlation_bound_check,
    finite_volume_expectation,
    finite_volume_norm,
    random_mps_experiment,
    thermodynamic_limit,
    transfer_channel,
)
from .products import forward_replacement_check, random_sequence


@dataclass
class SuiteResult:
    id: int
    tag: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] #{self.id:02d} {self.tag}: {self.detail} ({self.seconds:.2f} s)"


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _random_hermitian(rng, n):
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (G + G.conj().T) / 2


def _ad_base(seed=2024):
    return EnvironmentBase.iid([amplitude_damping(0.3), amplitude_damping(0.6)], [0.5, 0.5], seed=seed)


# -- checks -------------------------------------------------------------------------------


def check_amplitude_damping():
    worst_cf, worst_opt, slowest = 0.0, 0.0, 0.0
    for g in (0.19, 0.36, 0.75):
        ch = amplitude_damping(g)
        exact = math.sqrt(1 - g)
        cf, t1 = _timed(lambda: kappa_tr(ch, method="closed_form").value)
        opt, t2 = _timed(lambda: kappa_tr(ch, method="optimize").value)
        worst_cf = max(worst_cf, abs(cf - exact))
        worst_opt = max(worst_opt, abs(opt - exact))
        slowest = max(slowest, t1, t2)
    ok = worst_cf <= 1e-9 and worst_opt <= 1e-6 and slowest < 1.0
    return ok, f"closed-form err {worst_cf:.1e} <= 1e-9, optimizer err {worst_opt:.1e} <= 1e-6, max {slowest:.2f} s < 1 s"


def check_alternating_dephasing():
    kz = kappa_tr(dephasing_z()).value
    kx = kappa_tr(dephasing_x()).value
    kxz = kappa_tr(compose(dephasing_x(), dephasing_z())).value
    a = alpha_md(dephasing_z()).alpha
    ok = abs(kz - 1) <= 1e-9 and abs(kx - 1) <= 1e-9 and kxz <= 1e-9 and a <= 1e-6
    return ok, f"kappa(D_Z) = {kz:.12f}, kappa(D_X) = {kx:.12f}, kappa(D_X o D_Z) = {kxz:.1e}, alpha_MD(D_Z) = {a:.1e}"


def check_depolarizing():
    errs = []
    ok = True
    for d in (2, 3):
        for p in (0.25, 0.5):
            ch = depolarizing(p, d)
            k = kappa_tr(ch).value
            md = alpha_md(ch)
            doeb = alpha_doeblin(ch).alpha
            errs.append(max(abs(k - (1 - p)), abs(md.alpha - p), abs(doeb - p)))
            ok &= abs(k - (1 - p)) <= 1e-6 and md.verified and abs(md.alpha - p) <= 1e-5 and abs(doeb - p) <= 1e-5
            ok &= doeb <= md.alpha + 1e-6 and k <= 1 - md.alpha + 1e-6
    return ok, f"max deviation {max(errs):.1e} (tolerance 1e-5), certificates verified, chain order holds"


def check_werner_holevo():
    ok = True
    parts = []
    for d in (2, 3):
        ch = werner_holevo_like(d)
        md = alpha_md(ch)
        doeb = alpha_doeblin(ch).alpha
        b_err = float(np.linalg.norm(md.B - np.eye(d) / (d + 1), 2))
        ok &= md.verified and md.alpha >= d / (d + 1) - 1e-5 and b_err <= 1e-4 and doeb <= 1e-5
        parts.append(f"d={d}: alpha_MD={md.alpha:.6f} (>= {d / (d + 1):.6f}), |B - I/(d+1)| = {b_err:.1e}, alpha_Doeb={doeb:.1e}")
    return ok, "; ".join(parts)


def check_replacement_sandwich():
    fails, worst = 0, 0.0
    t0 = time.perf_counter()
    for i in range(50):
        length = 1 + i % 6
        seq = random_sequence(2, length, seed=1000 + i)
        rep = forward_replacement_check(seq, 0, length, slack=1e-5)
        fails += not rep.ok
        worst = max(worst, rep.dist / max(rep.kappa.value, 1e-300))
    dt = time.perf_counter() - t0
    ok = fails == 0 and dt < 60
    return ok, f"{50 - fails}/50 products satisfy kappa <= dist <= 4 kappa and drift <= 2 kappa (max ratio {worst:.3f}), {dt:.1f} s < 60 s"


def check_submultiplicativity():
    worst = -np.inf
    for i in range(200):
        d = 2 + i % 2
        A = random_channel(d, 1 + i % 3, seed=5000 + 2 * i)
        B = random_channel(d, 2, seed=5001 + 2 * i)
        lhs = kappa_tr(compose(A, B)).value
        rhs = kappa_tr(A).value * kappa_tr(B).value
        worst = max(worst, lhs - rhs)
    return worst <= 2e-6, f"max kappa(AoB) - kappa(A)kappa(B) = {worst:.2e} <= 2e-6 over 200 pairs"


def check_lyapunov():
    target = 0.25 * (math.log(0.7) + math.log(0.4))
    base = _ad_base()
    est, dt = _timed(lambda: lyapunov_estimate(base, 40, 400))
    tol = max(3 * est.stderr, 0.005)
    err = abs(est.mean_log_kappa_over_n - target)
    worst = 0.0
    for i in range(20):
        traj = sample_fiber(base, N=40, sample_index=i)
        gammas = [0.3 if traj.atom_index[j + traj.N] == 0 else 0.6 for j in range(40)]
        exact = float(np.prod(np.sqrt(1 - np.array(gammas))))
        worst = max(worst, abs(kappa_tr(traj.forward_product(40)).value - exact))
    ok = err <= tol and worst <= 1e-9 and dt < 30
    return ok, (f"lambda = {est.mean_log_kappa_over_n:.5f} +- {est.stderr:.5f}, |err| = {err:.4f} <= {tol:.4f}; "
                f"fiber oracle err {worst:.1e} <= 1e-9; {dt:.1f} s < 30 s")


def check_annealed():
    base = _ad_base()
    m = 0.5 * (math.sqrt(0.7) + math.sqrt(0.4))
    rep = annealed_mean_kappa(base, [5, 10, 20], 2000, recursion_pairs=[(5, 0, 5), (5, 0, 10)])
    ok = True
    worst = 0.0
    for n, a, se in rep.table:
        z = abs(a - m ** n) / se
        worst = max(worst, z)
        ok &= z <= 3
    ok &= abs(rep.eta - 0.30843) <= 0.02 and rep.recursion_ok
    return ok, f"max |a_n - m^n| / se = {worst:.2f} <= 3, eta = {rep.eta:.4f} (target 0.30843 +- 0.02), recursion ok = {rep.recursion_ok}"


def check_bit_swap():
    ch = bit_swap()
    S = np.eye(4, dtype=complex)
    worst = 0.0
    for _ in range(20):
        S = S @ ch.superop
        worst = max(worst, abs(kappa_tr(QuantumChannel(S, validate=False)).value - 1))
    w, V = np.linalg.eig(ch.superop)
    fixed = np.where(np.abs(w - 1) < 1e-9)[0]
    unique = len(fixed) == 1
    rho = V[:, fixed[0]].reshape(2, 2, order="F")
    rho = rho / np.trace(rho)
    is_half = np.linalg.norm(rho - np.eye(2) / 2) <= 1e-12
    base = EnvironmentBase.deterministic(ch)
    lam = lyapunov_estimate(base, 20, 1).mean_log_kappa_over_n
    st = stationary_state(sample_fiber(base, N=64))
    ok = worst <= 1e-9 and unique and is_half and abs(lam) <= 1e-9 and not st.ok
    return ok, (f"max |kappa(Phi^n) - 1| = {worst:.1e}, unique fixed state I/2 = {unique and is_half}, "
                f"lambda = {lam:.1e}, stationary_state failure = {st.failure!r}")


def check_unitary_cocycle():
    worst = 0.0
    for d in (2, 3):
        base = EnvironmentBase.iid_sampler(haar_unitary_sampler(d), d, seed=99)
        for i in range(5):
            traj = sample_fiber(base, N=20, sample_index=i)
            for n in range(1, 21):
                worst = max(worst, abs(kappa_tr(traj.forward_product(n)).value - 1))
    return worst <= 1e-8, f"max |kappa_n - 1| = {worst:.1e} <= 1e-8 for n <= 20, d in (2, 3)"


def check_mps_dense_transfer():
    rng = np.random.default_rng(11)
    worst_phi, worst_z = 0.0, 0.0
    t0 = time.perf_counter()
    for i in range(50):
        n = int(rng.integers(3, 9))
        m = int(rng.integers(1, 4))
        chain = MpsChain.random(2, 2, n, seed=int(rng.integers(2**31)))
        X = LocalObservable(_random_hermitian(rng, 2**m), 1)
        a = finite_volume_expectation(chain, X, n, "dense")
        b = finite_volume_expectation(chain, X, n, "transfer")
        psi = chain_vector_norm(chain, n)
        worst_phi = max(worst_phi, abs(a - b))
        worst_z = max(worst_z, abs(psi - finite_volume_norm(chain, n)))
    dt = time.perf_counter() - t0
    ok = worst_phi <= 1e-9 and worst_z <= 1e-9 and dt < 60
    return ok, f"max |dense - transfer| = {worst_phi:.1e}, max |<Psi|Psi> - Tr_sup| = {worst_z:.1e} (<= 1e-9), {dt:.1f} s < 60 s"


def chain_vector_norm(chain, n):
    from .mps import finite_volume_vector

    v = finite_volume_vector(chain, n)
    return float(np.real(np.vdot(v, v)))


def _positive_chain(n_max=200, seed=21):
    """Random Kraus-rank-4 isometries on a qubit bond: strictly positive transfer maps."""
    return MpsChain.random(4, 2, n_max, seed=seed)


def check_thermodynamic_limit():
    chain = _positive_chain()
    rng = np.random.default_rng(5)
    X = LocalObservable(_random_hermitian(rng, 16), 1)
    rep = thermodynamic_limit(chain, X, max_n=80)
    if rep.failure is not None or rep.predicted_depth is None:
        return False, f"no limit: {rep.failure}"
    a = min(is_strictly_positive(transfer_channel(chain, n))[1] for n in range(1, rep.history[-1]["n"] + 1))
    after = [h["error"] for h in rep.history if h["n"] >= rep.predicted_depth]
    ok = a > 0 and rep.ok and max(after) <= 1e-6
    return ok, (f"a = {a:.2e} > 0, Z and rate bounds hold at all {len(rep.history)} depths = {rep.ok}, "
                f"error <= {max(after):.1e} <= 1e-6 from predicted depth {rep.predicted_depth}")


def _gap_chain(n_max=120, seed=31):
    rng = np.random.default_rng(seed)
    sites = [haar_isometry(rng, 4, 2).reshape(2, 2, 2) for _ in range(n_max)]
    sites[2] = np.array(dephasing_z().kraus)
    sites[3] = np.array(dephasing_x().kraus)
    return MpsChain(sites)


def check_clustering():
    rng = np.random.default_rng(13)
    fails, total = 0, 0
    for c in range(20):
        chain = MpsChain.random(2, 2, 120, seed=700 + c)
        for L in range(1, 7):
            A = LocalObservable(_random_hermitian(rng, 2), 1)
            B = LocalObservable(_random_hermitian(rng, 2), L + 2)
            fails += not correlation_bound_check(chain, A, B).passed
            total += 1
    res = correlation_bound_check(_gap_chain(), LocalObservable(np.diag([1.0, -1.0]), 2),
                                  LocalObservable(np.diag([1.0, -1.0]), 5))
    ok = fails == 0 and res.connected_corr <= 1e-8
    return ok, f"{total - fails}/{total} gap checks pass, D_Z/D_X gap correlation = {res.connected_corr:.1e} <= 1e-8"


def check_random_mps():
    base = EnvironmentBase.iid_sampler(haar_isometry_sampler(2, 2), 2, seed=7)
    X = LocalObservable(np.diag([1.0, -1.0]), 1)
    rep = random_mps_experiment(base, 1, X, n_max=150, samples=50)
    freq = max(t["frequency"] for t in rep.tails)
    ok = rep.lyapunov < 0 and rep.all_converged and rep.quenched_ok and rep.tails_ok
    return ok, (f"lambda = {rep.lyapunov:.4f} < 0, all fibers converge = {rep.all_converged}, "
                f"errors under C^- e^(beta(n-m)) = {rep.quenched_ok}, max tail frequency {freq:.3f}, tails ok = {rep.tails_ok}")


def check_hs_criterion():
    worst = max(abs(s0(depolarizing(p, d)) - (1 - p)) for d in (2, 3) for p in (0.25, 0.5))
    H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    bist = EnvironmentBase.iid(
        [depolarizing(0.2), dephasing_z(), dephasing_x(), unitary_channel(H)], [0.25] * 4, seed=17
    )
    rep = bistochastic_hs_report(bist, n=8, samples=50, L=2)
    zx = EnvironmentBase.iid([dephasing_z(), dephasing_x()], [0.5, 0.5], seed=19)
    blk = bistochastic_hs_report(zx, n=8, samples=50, L=2)
    ok = worst <= 1e-9 and rep.product_bound_ok and blk.certified
    return ok, (f"max |s0 - (1-p)| = {worst:.1e}, product bound on 50 fibers = {rep.product_bound_ok}, "
                f"D_Z/D_X block mean log s0 = {blk.block_mean_log_s0} certified = {blk.certified}")


def check_diamond_witness():
    worst = 0.0
    for i in range(20):
        ch = random_channel(2 + i % 2, 1 + i % 3, seed=9000 + i)
        worst = max(worst, abs(diamond_witness(ch) - 1))
    return worst <= 1e-12, f"max |ratio - 1| = {worst:.1e} <= 1e-12 over 20 channels"


CHECKS = [
    (1, "amplitude-damping kappa closed form", check_amplitude_damping),
    (2, "alternating dephasing", check_alternating_dephasing),
    (3, "depolarizing coefficient chain", check_depolarizing),
    (4, "werner-holevo CP vs state Doeblin", check_werner_holevo),
    (5, "replacement sandwich and drift", check_replacement_sandwich),
    (6, "submultiplicativity", check_submultiplicativity),
    (7, "lyapunov exponent iid amplitude damping", check_lyapunov),
    (8, "annealed decay and recursion", check_annealed),
    (9, "zero exponent bit swap", check_bit_swap),
    (10, "unitary cocycle", check_unitary_cocycle),
    (11, "mps dense vs transfer", check_mps_dense_transfer),
    (12, "mps thermodynamic limit rate", check_thermodynamic_limit),
    (13, "mps clustering bound", check_clustering),
    (14, "random mps quenched and tails", check_random_mps),
    (15, "hilbert-schmidt criterion", check_hs_criterion),
    (16, "diamond witness ratio", check_diamond_witness),
]


def run_check(cid):
    for i, tag, fn in CHECKS:
        if i == cid:
            t0 = time.perf_counter()
            passed, detail = fn()
            return SuiteResult(i, tag, bool(passed), detail, time.perf_counter() - t0)
    raise KeyError(f"no check #{cid}")


def run_suite(filter_text=None, out_dir=".", echo=True):
    """Run checks whose number or tag contains ``filter_text``; writes ``suite_summary.csv``."""
    selected = [c for c in CHECKS if filter_text is None or filter_text in c[1] or filter_text == str(c[0])]
    rows = []
    for cid, _, _ in selected:
        res = run_check(cid)
        if echo:
            print(res.line(), flush=True)
        rows.append(res)
    if rows:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "suite_summary.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "tag", "passed", "seconds", "detail"])
            for r in rows:
                w.writerow([r.id, r.tag, r.passed, f"{r.seconds:.3f}", r.detail])
    return rows
