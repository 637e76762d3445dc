import json
import hashlib
from pathlib import Path

import pytest

from fluxlab.cli import main


def test_profile_json_payload(tmp_path):
    out = tmp_path / "prof.json"
    code = main(["profile", "--p", "1.75", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["command"] == "profile"
    assert payload["results"]["exists"] is True
    assert payload["results"]["c"] == pytest.approx(0.34871756, rel=1e-5)
    assert set(payload) >= {"command", "config", "results", "tolerances",
                            "seed", "version"}
    assert (tmp_path / "prof.png").exists()


def test_profile_nonexistence_is_success(tmp_path):
    out = tmp_path / "none.json"
    code = main(["profile", "--p", "2.2", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["results"]["exists"] is False
    assert payload["results"]["reason"]


def test_profile_degenerate_reports_inconclusive(tmp_path):
    out = tmp_path / "deg.json"
    assert main(["profile", "--p", "1.5", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["results"]["exists"] is False
    assert "degenerate" in payload["results"]["reason"]


def test_malformed_config_exits_2(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"command": "solve", "p": 1.75, "N": -4}))
    assert main(["solve", "--config", str(cfg)]) == 2


def test_unknown_config_key_exits_2(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"command": "solve", "p": 1.75, "frobnicate": 1}))
    assert main(["solve", "--config", str(cfg)]) == 2


def test_command_mismatch_exits_2(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"command": "sweep", "p": 1.75}))
    assert main(["solve", "--config", str(cfg)]) == 2


def test_solve_csv_columns_and_header(tmp_path):
    out = tmp_path / "solve.csv"
    code = main(["solve", "--p", "1.75", "--N", "64", "--gamma", "4",
                 "--out", str(out), "--format", "csv"])
    assert code == 0
    lines = out.read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    assert any("config" in l for l in header)
    assert any("seed" in l for l in header)
    assert any("version" in l for l in header)
    cols = next(l for l in lines if not l.startswith("#"))
    assert cols == "t,trace,g_trace,forcing"
    assert (tmp_path / "solve.png").exists()


def test_idempotent_outputs(tmp_path):
    h = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert main(["solve", "--p", "1.75", "--N", "64", "--gamma", "4",
                     "--seed", "7", "--out", str(out)]) == 0
        h.append(hashlib.sha256(out.read_bytes()).hexdigest())
    assert h[0] == h[1]


def test_solve_config_with_density(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "command": "solve", "p": 1.75, "N": 64, "gamma": 2.0, "T": 1.0,
        "mu": {"density": {"nodes": [0.0, 0.5, 1.0], "values": [0.0, 1.0, 0.0]}},
        "nu": {"atoms": [[0.5, 0.2]]},
    }))
    out = tmp_path / "out.json"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert len(payload["results"]["trace"]) == 64


def test_sweep_csv_schema(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--p", "1.3", "--N", "256", "--gamma", "4",
                 "--out", str(out), "--format", "csv"])
    assert code == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "ell,rescaled_trace_t1,cauchy_ratio"
    assert len(lines) == 10  # header + 9 rungs
    assert (tmp_path / "sweep.png").exists()


def test_solve_interval_runs(tmp_path):
    out = tmp_path / "intv.json"
    assert main(["solve-interval", "--p", "1.75", "--N", "48",
                 "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert len(payload["results"]["trace_left"]) == 48


def test_verify_battery_passes(tmp_path):
    out = tmp_path / "verify.json"
    assert main(["verify", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["results"]["all_pass"] is True
    for check in payload["results"]["checks"]:
        assert {"name", "value", "tolerance", "pass"} <= set(check)
