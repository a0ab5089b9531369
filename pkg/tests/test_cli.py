import csv
import json
import os
import subprocess
import sys

import pytest

from reducing_atlas.cli import RunConfig, main
from reducing_atlas.errors import ConfigurationError

Z2 = {"factors": [{"zeros": [[0, 0], [0, 0]], "rotation_angle": 0}]}
Z3 = {"factors": [{"zeros": [[0, 0]] * 3}]}
MOBIUS = {"factors": [{"zeros": [[0.5, 0]]}]}
BIDISC = {"factors": [{"zeros": [[0, 0]] * 2}, {"zeros": [[0, 0]] * 3}]}


def write_config(tmp_path, symbol, name="config.json", **extra):
    doc = {"symbol": symbol, "truncation": 16, "quadrature": {"m_r": 48, "m_theta": 128}}
    doc.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def load(path):
    with open(path) as fh:
        return json.load(fh)


def without_timings(doc):
    doc = dict(doc)
    doc.pop("timings", None)
    return doc


def test_analyze_z2(tmp_path):
    cfg = write_config(tmp_path, Z2)
    out = tmp_path / "out"
    assert main(["analyze", cfg, "--out", str(out)]) == 0
    doc = load(out / "analysis.json")
    assert doc["status"] == "ok" and doc["q"] == 2
    assert [g["cycles"] for g in doc["generators"]] == ["(0 1)"]


@pytest.mark.parametrize("symbol, q", [(MOBIUS, 1), (BIDISC, 6)])
def test_analyze_q(tmp_path, symbol, q):
    cfg = write_config(tmp_path, symbol)
    assert main(["analyze", cfg, "--out", str(tmp_path / "o")]) == 0
    assert load(tmp_path / "o" / "analysis.json")["q"] == q


def test_verify_z2_and_report(tmp_path):
    cfg = write_config(tmp_path, Z2)
    out = tmp_path / "out"
    assert main(["verify", cfg, "--out", str(out)]) == 0
    ver = load(out / "verification.json")
    assert ver["status"] == "ok" and ver["ranks"] == [6, 6] and ver["trusted_block"] == 12
    assert all(r["pass"] for r in ver["residuals"])
    assert main(["report", cfg, "--out", str(out)]) == 0
    for name in ("report.json", "atlas.json", "residuals.csv", "paths.csv"):
        assert (out / name).exists()
    with open(out / "residuals.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["name", "residual", "tolerance", "pass"]
    assert all(r["pass"] == "true" for r in rows)
    with open(out / "paths.csv") as fh:
        paths = list(csv.DictReader(fh))
    assert {p["path"] for p in paths} == {"lasso[0]", "boundary"}
    atlas = load(out / "atlas.json")
    assert atlas["q"] == 2 and atlas["orbit_table"] == [[0, 1], [1, 0]]
    report = load(out / "report.json")
    assert report["ranks"] == [6, 6] and report["stages"] == {"analyze": "ok", "verify": "ok"}


def test_verify_z3_ranks(tmp_path):
    cfg = write_config(tmp_path, Z3, truncation=18)
    assert main(["verify", cfg, "--out", str(tmp_path / "o")]) == 0
    assert load(tmp_path / "o" / "verification.json")["ranks"] == [4, 4, 4]


def test_injected_wrong_idempotent_fails_verification(tmp_path):
    bad = [[[0.7, 0], [0.3, 0]], [[0.3, 0], [-0.3, 0]]]
    cfg = write_config(tmp_path, Z2, idempotents=bad)
    assert main(["verify", cfg, "--out", str(tmp_path / "o")]) == 3
    ver = load(tmp_path / "o" / "verification.json")
    assert ver["status"] == "failed" and "projection[0].idempotent" in ver["failures"]


def test_report_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, Z3, truncation=18)
    texts = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["verify", cfg, "--out", str(out)]) == 0
        assert main(["report", cfg, "--out", str(out)]) == 0
        texts.append({name: (out / name).read_text() for name in ("atlas.json", "residuals.csv", "paths.csv")})
        texts[-1]["report"] = without_timings(load(out / "report.json"))
    assert texts[0] == texts[1]


def test_report_without_prior_stage_exits_4(tmp_path):
    cfg = write_config(tmp_path, Z2)
    assert main(["report", cfg, "--out", str(tmp_path / "empty")]) == 4
    assert main(["analyze", cfg, "--out", str(tmp_path / "a")]) == 0
    # verification output is required by default, but can be waived per stage
    assert main(["report", cfg, "--out", str(tmp_path / "a")]) == 4
    assert main(["report", cfg, "--out", str(tmp_path / "a"), "--stage", "analyze"]) == 0
    assert "ranks" not in load(tmp_path / "a" / "report.json")


def test_unwritable_output_exits_4(tmp_path):
    cfg = write_config(tmp_path, Z2)
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["analyze", cfg, "--out", str(blocker / "sub")]) == 4


@pytest.mark.parametrize("doc", [
    {"symbol": Z2, "truncation": 4},
    {"symbol": Z2, "quadrature": {"m_r": 8}},
    {"symbol": Z2, "tolerances": {"verification": 0}},
    {"symbol": Z2, "colour": "blue"},
    {"symbol": {"factors": [{"zeros": [[2, 0]]}]}},
    {"truncation": 16},
])
def test_invalid_configs_exit_4(tmp_path, doc):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["analyze", str(path), "--out", str(tmp_path / "o")]) == 4


def test_malformed_json_exits_4(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["analyze", str(path)]) == 4


def test_analysis_crash_exits_2_and_is_recorded(tmp_path):
    cfg = write_config(tmp_path, Z2, tolerances={"tracking": 1e-30})
    out = tmp_path / "o"
    assert main(["analyze", cfg, "--out", str(out)]) == 2
    doc = load(out / "analysis.json")
    assert doc["status"] == "failed" and doc["error"]["stage"] == "analyze"
    assert doc["error"]["type"] == "TrackingError"


def test_run_config_validation():
    with pytest.raises(ConfigurationError):
        RunConfig(Z2, N=7)
    cfg = RunConfig.from_json({"symbol": Z2})
    assert RunConfig.from_json(cfg.to_json()) == cfg


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, MOBIUS)
    proc = subprocess.run([sys.executable, "-m", "reducing_atlas", "analyze", cfg, "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
