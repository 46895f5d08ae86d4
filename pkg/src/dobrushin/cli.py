"""Configuration-driven experiment runner.

Usage::

    dobrushin run config.json [--out DIR] [--seed N] [--threads K]
    dobrushin validate config.json
    dobrushin paper-suite [--filter TAG] [--out DIR]

Exit codes: 0 when every asserted inequality holds, 1 on input errors, 2 when
an inequality fails or a computation reports a mathematical failure.
``DOBRUSHIN_THREADS`` overrides ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_INPUT, EXIT_FAILED = 0, 1, 2
STOCHASTIC = {"cocycle_lyapunov", "cocycle_annealed", "random_mps"}


class ConfigError(ValueError):
    """Input problem reported with exit code 1."""


@dataclass
class Check:
    """One asserted inequality, named by its tag."""

    tag: str
    lhs: float
    rhs: float
    passed: bool
    detail: str = ""

    def as_dict(self):
        return {"tag": self.tag, "lhs": self.lhs, "rhs": self.rhs, "passed": self.passed, "detail": self.detail}


def _le(tag, lhs, rhs, slack=0.0, detail=""):
    return Check(tag, float(lhs), float(rhs), bool(lhs <= rhs + slack), detail)


# -- JSON helpers ---------------------------------------------------------------------------


def jsonable(obj):
    """Plain JSON value: complex as ``[re, im]``, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        if z.imag == 0:
            return jsonable(z.real)
        return [jsonable(z.real), jsonable(z.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def _resolve_files(node, root):
    """Replace ``{"$file": path}`` nodes by the JSON they point to (relative to ``root``)."""
    if isinstance(node, dict):
        if set(node) == {"$file"}:
            path = (root / node["$file"]).resolve()
            if not path.is_file():
                raise ConfigError(f"referenced file not found: {node['$file']}")
            try:
                return _resolve_files(json.loads(path.read_text()), path.parent)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"referenced file {node['$file']} is not valid JSON: {exc}") from None
        return {k: _resolve_files(v, root) for k, v in node.items()}
    if isinstance(node, list):
        return [_resolve_files(v, root) for v in node]
    return node


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return _resolve_files(raw, path.parent)


def content_hash(config):
    """``sha256`` of the canonical JSON of the resolved inputs."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode()).hexdigest()


# -- decoding inputs ---------------------------------------------------------------------


def _observable(obj, name):
    from .mps import LocalObservable

    if not isinstance(obj, dict) or "matrix" not in obj:
        raise ConfigError(f"{name}: needs a 'matrix' (list of rows)")
    arr = np.array(obj["matrix"], dtype=float)
    if arr.ndim == 3 and arr.shape[2] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    elif arr.ndim != 2:
        raise ConfigError(f"{name}: matrix rows must hold numbers or [re, im] pairs")
    try:
        return LocalObservable(arr, int(obj.get("start", 1)))
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _sequence(obj):
    from .products import random_sequence, sequence_from_json

    if obj.get("kind") == "random":
        return random_sequence(int(obj["d"]), int(obj["length"]), obj["seed"], int(obj.get("kraus_rank", 2)))
    return sequence_from_json(obj)


def _decode(kind, inputs):
    """Build the library objects of one config; every failure becomes a :class:`ConfigError`."""
    from .channels import channel_from_json
    from .cocycle import EnvironmentBase
    from .mps import chain_from_json

    def need(key):
        if key not in inputs:
            raise ConfigError(f"inputs.{key} is required for kind {kind!r}")
        return inputs[key]

    def posint(key, default=None):
        value = inputs.get(key, default)
        if value is None:
            raise ConfigError(f"inputs.{key} is required for kind {kind!r}")
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ConfigError(f"inputs.{key} must be a positive integer, got {value!r}")
        return value

    def build(label, fn, obj):
        try:
            return fn(obj)
        except ConfigError:
            raise
        except (ValueError, KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"inputs.{label}: {exc}") from None

    out = {}
    if kind == "channel_analyze":
        out["channel"] = build("channel", channel_from_json, need("channel"))
    elif kind == "product_sweep":
        seq = build("sequence", _sequence, need("sequence"))
        lo, hi = seq.interval
        if lo is None or hi is None:
            raise ConfigError("inputs.sequence must have a finite interval")
        out["sequence"] = seq
        windows = inputs.get("windows")
        if windows is None:
            windows = [[lo, t] for t in range(lo + 1, hi + 1)]
        for w in windows:
            if len(w) != 2 or not lo <= w[0] <= w[1] <= hi:
                raise ConfigError(f"inputs.windows: {w} is outside the sequence interval [{lo}, {hi}]")
        out["windows"] = [tuple(int(x) for x in w) for w in windows]
    elif kind in ("cocycle_lyapunov", "cocycle_annealed"):
        out["base"] = build("base", EnvironmentBase.from_json, need("base"))
        out["samples"] = posint("samples")
        if kind == "cocycle_lyapunov":
            out["n"] = posint("n")
            out["direction"] = inputs.get("direction", "forward")
            if out["direction"] not in ("forward", "pullback"):
                raise ConfigError("inputs.direction must be 'forward' or 'pullback'")
        else:
            n_list = need("n_list")
            if not n_list or any(not isinstance(n, int) or n < 1 for n in n_list):
                raise ConfigError("inputs.n_list must be a non-empty list of positive integers")
            out["n_list"] = n_list
            out["recursion_pairs"] = [tuple(p) for p in inputs.get("recursion_pairs", [])]
    elif kind in ("mps_limit", "mps_correlations"):
        chain = build("chain", chain_from_json, need("chain"))
        out["chain"] = chain
        names = ("observable",) if kind == "mps_limit" else ("A", "B")
        for name in names:
            X = _observable(need(name), f"inputs.{name}")
            try:
                a, b = X.sites(chain.d_K)
            except ValueError as exc:
                raise ConfigError(f"inputs.{name}: {exc}") from None
            if chain.n_max is not None and b > chain.n_max:
                raise ConfigError(f"inputs.{name}: support [{a}, {b}] exceeds the chain length {chain.n_max}")
            out[name] = X
        if kind == "mps_correlations" and not out["A"].sites(chain.d_K)[1] + 1 < out["B"].sites(chain.d_K)[0]:
            raise ConfigError("inputs.A and inputs.B need disjoint supports with a gap of at least one site")
        out["max_n"] = inputs.get("max_n")
    elif kind == "random_mps":
        out["base"] = build("base", EnvironmentBase.from_json, need("base"))
        from .cocycle import sample_fiber
        from .mps import MpsChain

        X = _observable(need("observable"), "inputs.observable")
        try:
            d_K = MpsChain.from_fiber(sample_fiber(out["base"], 0, N=1)).d_K
            out["m"] = X.sites(d_K)[1]
        except ValueError as exc:
            raise ConfigError(f"inputs.observable: {exc}") from None
        out["observable"] = X
        out["n_max"] = posint("n_max")
        out["samples"] = posint("samples")
        out["gaps"] = inputs.get("gaps", [1, 2, 3, 4, 5, 6])
    else:
        raise ConfigError(f"unknown kind {kind!r}")
    return out


def validate_config(config, seed_override=None):
    """Schema diagnostics without computation; empty list when the config is usable."""
    problems = []
    kind = config.get("kind")
    if kind is None:
        return ["missing 'kind'"]
    if not isinstance(config.get("inputs"), dict):
        problems.append("missing 'inputs' object")
    if kind in STOCHASTIC and config.get("seed") is None and seed_override is None:
        problems.append(f"missing 'seed' (required for stochastic kind {kind!r})")
    seed = config.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        problems.append(f"'seed' must be a non-negative integer, got {seed!r}")
    if problems:
        return problems
    try:
        _decode(kind, config["inputs"])
    except ConfigError as exc:
        problems.append(str(exc))
    return problems


# -- experiments ---------------------------------------------------------------------------


def _run_channel_analyze(obj, seed, tol):
    from .coefficients import alpha_doeblin, alpha_md
    from .contraction import kappa_tr, s0

    ch = obj["channel"]
    slack = tol.get("slack", 1e-6)
    kap = kappa_tr(ch, seed=seed)
    md = alpha_md(ch, seed=seed)
    doeb = alpha_doeblin(ch)
    s = s0(ch)
    results = {
        "d": ch.d,
        "kappa_tr": {"value": kap.value, "mode": kap.mode},
        "alpha_md": {"value": md.alpha, "mode": "lower" if md.verified else "unverified", "upper": md.alpha_upper},
        "alpha_doeblin": {"value": doeb.alpha, "mode": "sdp", "relaxed": doeb.relaxed},
        "s0": {"value": s, "mode": "exact"},
    }
    checks = [
        _le("md-bound: kappa_tr <= 1 - alpha_MD", kap.value, 1 - md.alpha, slack),
        _le("doeblin-order: alpha_Doeb <= alpha_MD", doeb.alpha, md.alpha, slack),
        _le("hs-bound: kappa_tr <= sqrt(d) s0", kap.value, math.sqrt(ch.d) * s, slack),
    ]
    return results, checks, {}, []


def _run_product_sweep(obj, seed, tol):
    from .products import forward_replacement_check, pullback_consistency, window_kappa

    seq = obj["sequence"]
    slack = tol.get("slack", 1e-6)
    rows, checks = [], []
    kap = {}
    for s, t in obj["windows"]:
        if s == t:
            continue
        rep = forward_replacement_check(seq, s, t, slack=slack, seed=seed)
        kap[(s, t)] = rep.kappa.value
        rows.append([s, t, rep.kappa.value, rep.kappa.mode, rep.dist, rep.drift, rep.sandwich_ok, rep.drift_ok])
        checks.append(Check("replacement-sandwich: kappa <= ||Phi - R_tau||_1->1 <= 4 kappa", rep.dist,
                            4 * rep.kappa.value, rep.sandwich_ok, f"window [{s}, {t})"))
        checks.append(_le("replacement-drift: ||Phi(tau) - Phi(tau')||_1 <= 2 kappa", rep.drift,
                          2 * rep.kappa.value, slack, f"window [{s}, {t})"))
    for (s, t), k in kap.items():
        for r in range(s + 1, t):
            left = kap.get((r, t)) or window_kappa(seq, r, t, seed=seed).value
            right = kap.get((s, r)) or window_kappa(seq, s, r, seed=seed).value
            checks.append(_le("submultiplicativity: kappa(t:s) <= kappa(t:r) kappa(r:s)", k, left * right,
                              2e-6, f"s={s} r={r} t={t}"))
    results = {"windows": len(rows)}
    lo, hi = seq.interval
    if hi - lo >= 2:
        gap, ok = pullback_consistency(seq, hi - 1, tol=tol.get("pullback", 1e-10))
        results["pullback_consistency_gap"] = gap
        checks.append(Check("pullback-consistency: rho_{t+1} = Phi_t(rho_t)", gap,
                            3 * tol.get("pullback", 1e-10), bool(ok)))
    header = ["s", "t", "kappa", "mode", "replacement_dist", "drift", "sandwich_ok", "drift_ok"]
    return results, checks, {"windows": (header, rows)}, []


def _run_cocycle_lyapunov(obj, seed, tol):
    from .cocycle import lyapunov_estimate

    est = lyapunov_estimate(obj["base"], obj["n"], obj["samples"], seed=seed, direction=obj["direction"])
    results = {
        "lyapunov": {"value": est.mean_log_kappa_over_n, "mode": "mc", "stderr": est.stderr,
                     "ci95_halfwidth": est.ci_halfwidth},
        "neg_inf_count": est.neg_inf_count,
        "exact_replacement": est.exact_replacement,
        "n": est.n,
        "samples": est.samples,
    }
    checks = [_le("kingman: lambda_tr <= 0", est.mean_log_kappa_over_n, 0.0)]
    rows = [[k, v] for k, v in est.kingman_curve]
    return results, checks, {"kingman_curve": (["n", "mean_log_kappa_over_n"], rows)}, []


def _run_cocycle_annealed(obj, seed, tol):
    from .cocycle import annealed_mean_kappa

    rep = annealed_mean_kappa(obj["base"], obj["n_list"], obj["samples"], seed=seed,
                              recursion_pairs=obj["recursion_pairs"] or None)
    results = {"A": rep.A, "eta": rep.eta, "eta_stderr": rep.eta_stderr, "recursion_ok": rep.recursion_ok}
    checks = [
        Check("annealed-recursion: a_{r+s+t} <= a_r a_t + rho_s sqrt(a_r a_t)", row["lhs"], row["rhs"],
              bool(row["ok"]), f"r={row['r']} s={row['s']} t={row['t']}")
        for row in rep.recursion
    ]
    rows = [[n, m, se] for n, m, se in rep.table]
    return results, checks, {"annealed": (["n", "mean_kappa", "stderr"], rows)}, []


def _run_mps_limit(obj, seed, tol):
    from .mps import thermodynamic_limit

    rep = thermodynamic_limit(obj["chain"], obj["observable"], tol=tol.get("pullback", 1e-12), max_n=obj["max_n"])
    if rep.failure is not None:
        return {"failure": rep.failure}, [], {}, [rep.failure]
    results = {"phi_inf": rep.phi_inf, "kappa_tail": rep.kappa_tail, "error_bound": rep.error_bound,
               "predicted_depth": rep.predicted_depth, "boundary_residual": rep.boundary_residual}
    checks = []
    rows = []
    for h in rep.history:
        checks.append(_le("mps-normalization: |Z_n - 1| <= 4 D^2 kappa", abs(h["Z"] - 1), h["z_bound"], 1e-10,
                          f"n={h['n']}"))
        if h["bound_applies"]:
            checks.append(_le("mps-limit-rate: |phi_n - phi_inf| <= 16 D^2 ||X|| kappa", h["error"],
                              h["phi_bound"], 1e-10, f"n={h['n']}"))
        rows.append([h["n"], h["phi"], h["error"], h["phi_bound"], h["Z"], h["kappa"]])
    if rep.boundary_residual is not None:
        checks.append(_le("mps-boundary-recursion: rho_r = Phi_r(rho_{r+1})", rep.boundary_residual,
                          3 * tol.get("pullback", 1e-12)))
    header = ["n", "phi_n", "abs_error", "bound", "Z_n", "kappa"]
    return results, checks, {"limit": (header, rows)}, []


def _run_mps_correlations(obj, seed, tol):
    from .mps import correlation_bound_check

    try:
        c = correlation_bound_check(obj["chain"], obj["A"], obj["B"], tol=tol.get("pullback", 1e-12))
    except ValueError as exc:
        return {"failure": str(exc)}, [], {}, [str(exc)]
    results = {"connected_corr": c.connected_corr, "bound": c.bound, "phi_ab": c.phi_ab, "phi_a": c.phi_a,
               "phi_b": c.phi_b, "kappa_gap": c.kappa_gap}
    checks = [Check("mps-clustering: |phi(AB) - phi(A)phi(B)| <= 4 ||A|| ||B|| kappa(gap)", c.connected_corr,
                    c.bound, c.passed)]
    return results, checks, {}, []


def _run_random_mps(obj, seed, tol):
    from .mps import random_mps_experiment

    X = obj["observable"]
    rep = random_mps_experiment(obj["base"], obj["m"], X, obj["n_max"], obj["samples"], seed=seed, gaps=obj["gaps"])
    results = {"lyapunov": {"value": rep.lyapunov, "mode": "mc", "stderr": rep.lyapunov_stderr},
               "beta": rep.beta, "annealed_A": rep.annealed_A, "annealed_eta": rep.annealed_eta,
               "all_converged": rep.all_converged}
    checks = [_le("random-mps: lambda_tr < 0", rep.lyapunov, -1e-12)]
    findings = [] if rep.all_converged else ["some fibers have no certified thermodynamic limit"]
    fiber_rows = []
    for f in rep.fibers:
        fiber_rows.append([f["sample"], f["converged"], f["phi_inf"], f.get("C_minus"), f.get("errors_under_rate")])
        if f["converged"]:
            checks.append(Check("random-mps-quenched: |phi_n - phi_inf| <= 16 D^2 ||X|| C^- e^{beta (n-m)}",
                                float(bool(f.get("errors_under_rate"))), 1.0, bool(f.get("errors_under_rate")),
                                f"fiber {f['sample']}"))
    tail_rows = []
    for t in rep.tails:
        tail_rows.append([t["L"], t["threshold"], t["frequency"], t["allowance"], t["stderr3"], t["uncertified"]])
        checks.append(_le("random-mps-tail: P{Gamma > C e^{-gamma L}} <= e^{-gamma L}", t["frequency"],
                          t["allowance"] + t["stderr3"], 0.0, f"L={t['L']}"))
    tables = {
        "fibers": (["sample", "converged", "phi_inf", "C_minus", "errors_under_rate"], fiber_rows),
        "tails": (["L", "threshold", "frequency", "allowance", "stderr3", "uncertified"], tail_rows),
    }
    return results, checks, tables, findings


RUNNERS = {
    "channel_analyze": _run_channel_analyze,
    "product_sweep": _run_product_sweep,
    "cocycle_lyapunov": _run_cocycle_lyapunov,
    "cocycle_annealed": _run_cocycle_annealed,
    "mps_limit": _run_mps_limit,
    "mps_correlations": _run_mps_correlations,
    "random_mps": _run_random_mps,
}


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([json.dumps(jsonable(v)) if isinstance(v, (complex, list)) else jsonable(v) for v in row])


def run_experiment(config, out_dir, seed_override=None):
    """Run one config; returns ``(exit_code, report)`` and writes ``report.json`` plus CSV tables."""
    problems = validate_config(config, seed_override)
    if problems:
        raise ConfigError("; ".join(problems))
    kind = config["kind"]
    seed = seed_override if seed_override is not None else config.get("seed", 0xD0B0)
    objects = _decode(kind, config["inputs"])
    tol = config.get("tolerances", {})
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    t0 = time.perf_counter()
    results, checks, tables, findings = RUNNERS[kind](objects, seed, tol)
    wall = time.perf_counter() - t0
    passed = all(c.passed for c in checks) and not findings
    report = {
        "kind": kind,
        "config": config,
        "seed": seed,
        "input_hash": content_hash({"config": config, "seed": seed}),
        "results": results,
        "checks": [c.as_dict() for c in checks],
        "findings": findings,
        "all_passed": passed,
        "timestamp": {"started": started, "wall_time_s": wall},
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(jsonable(report), indent=2) + "\n")
    for name, (header, rows) in tables.items():
        _write_csv(out / f"{name}.csv", header, rows)
    return (EXIT_OK if passed else EXIT_FAILED), report


# -- entry point ---------------------------------------------------------------------------


def _limit_threads(k):
    env = os.environ.get("DOBRUSHIN_THREADS")
    if env is not None:
        k = int(env)
    if k is None:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(k))


def build_parser():
    parser = argparse.ArgumentParser(prog="dobrushin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (default: results/<kind>)")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--threads", type=int, default=None)
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    p_suite = sub.add_parser("paper-suite", help="run the acceptance battery")
    p_suite.add_argument("--filter", default=None, help="only checks whose id or tag contains this text")
    p_suite.add_argument("--out", default=".", help="directory for suite_summary.csv")
    p_suite.add_argument("--threads", type=int, default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            config = load_config(args.config)
            problems = validate_config(config)
            for p in problems:
                print(f"error: {p}")
            if not problems:
                print("ok")
            return EXIT_OK if not problems else EXIT_INPUT
        _limit_threads(args.threads)
        if args.command == "run":
            config = load_config(args.config)
            out = args.out or config.get("output", {}).get("dir") or f"results/{config.get('kind', 'run')}"
            code, report = run_experiment(config, out, args.seed)
            failed = [c for c in report["checks"] if not c["passed"]]
            for c in failed:
                print(f"FAIL {c['tag']} ({c['detail']}): {c['lhs']:.6g} > {c['rhs']:.6g}")
            for f in report["findings"]:
                print(f"finding: {f}")
            print(f"{len(report['checks']) - len(failed)}/{len(report['checks'])} checks passed; report in {out}")
            return code
        from .suite import run_suite

        rows = run_suite(args.filter, out_dir=args.out)
        if not rows:
            print(f"no checks match {args.filter!r}")
            return EXIT_INPUT
        return EXIT_OK if all(r.passed for r in rows) else EXIT_FAILED
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
