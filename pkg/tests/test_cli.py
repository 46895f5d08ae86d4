import json
import shutil
from pathlib import Path

import pytest

from dobrushin.cli import EXIT_FAILED, EXIT_INPUT, EXIT_OK, content_hash, load_config, main, validate_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_channel_analyze_reports_kappa(tmp_path):
    code = main(["run", str(CONFIGS / "channel_analyze.json"), "--out", str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["results"]["kappa_tr"]["value"] == pytest.approx(0.8, abs=1e-12)
    assert report["all_passed"]


def test_unitary_chain_exits_with_finding(tmp_path, capsys):
    code = main(["run", str(CONFIGS / "mps_limit_unitary.json"), "--out", str(tmp_path)])
    assert code == EXIT_FAILED
    assert "no memory loss" in capsys.readouterr().out


def test_report_deterministic_modulo_timestamp(tmp_path):
    shutil.copy(CONFIGS / "cocycle_annealed.json", tmp_path)
    shutil.copy(CONFIGS / "ad_base.json", tmp_path)
    cfg = str(tmp_path / "cocycle_annealed.json")
    reports = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["run", cfg, "--out", str(out)]) == EXIT_OK
        rep = json.loads((out / "report.json").read_text())
        rep.pop("timestamp")
        reports.append(json.dumps(rep, sort_keys=True))
    assert reports[0] == reports[1]


def test_seed_override_changes_hash(tmp_path):
    cfg = load_config(CONFIGS / "cocycle_lyapunov.json")
    assert content_hash({"config": cfg, "seed": 1}) != content_hash({"config": cfg, "seed": 2})
    assert content_hash({"config": cfg, "seed": 1}) == content_hash({"config": cfg, "seed": 1})


def test_file_reference_resolved():
    cfg = load_config(CONFIGS / "cocycle_lyapunov.json")
    assert cfg["inputs"]["base"]["kind"] == "iid"


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json") if p.name != "ad_base.json"))
def test_shipped_configs_validate(name, capsys):
    assert main(["validate", str(CONFIGS / name)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "ok"


def test_missing_seed_diagnostic():
    cfg = {"kind": "cocycle_lyapunov", "inputs": {"base": load_config(CONFIGS / "ad_base.json"), "n": 5, "samples": 3}}
    problems = validate_config(cfg)
    assert any("seed" in p for p in problems)
    assert validate_config(cfg, seed_override=3) == []


def test_negative_gamma_diagnostic(tmp_path, capsys):
    path = write(tmp_path, "bad.json", {"kind": "channel_analyze", "inputs": {"channel": {"kind": "amplitude_damping", "gamma": -0.2}}})
    assert main(["validate", path]) == EXIT_INPUT
    assert "gamma" in capsys.readouterr().out


@pytest.mark.parametrize("cfg", [
    {"inputs": {}},
    {"kind": "no_such_kind", "inputs": {}},
    {"kind": "channel_analyze"},
    {"kind": "cocycle_annealed", "seed": -1, "inputs": {}},
])
def test_malformed_configs(tmp_path, cfg):
    assert main(["validate", write(tmp_path, "c.json", cfg)]) == EXIT_INPUT


def test_missing_file_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "absent.json")]) == EXIT_INPUT


def test_run_rejects_invalid_config(tmp_path):
    path = write(tmp_path, "bad.json", {"kind": "channel_analyze", "inputs": {"channel": {"kind": "depolarizing", "p": 2}}})
    assert main(["run", path, "--out", str(tmp_path / "o")]) == EXIT_INPUT


def test_suite_filter_runs_only_named(tmp_path, capsys):
    assert main(["paper-suite", "--filter", "diamond", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "#16" in out and "#01" not in out
    assert (tmp_path / "suite_summary.csv").exists()
    assert main(["paper-suite", "--filter", "nothing-matches-this", "--out", str(tmp_path)]) == EXIT_INPUT


def test_threads_flag(tmp_path):
    assert main(["run", str(CONFIGS / "channel_analyze.json"), "--out", str(tmp_path), "--threads", "1"]) == EXIT_OK
