import json
import os

import pytest

from gpbo.harness.cli import main


def run_flags(out_dir, **extra):
    flags = [
        "run", "--function", "branin", "--inference", "map", "--budget", "8",
        "--init-samples", "4", "--repeats", "1", "--seed", "4",
        "--out", str(out_dir), "--map-restarts", "2",
        "--acq-pool", "64", "--acq-starts", "2",
    ]
    for key, value in extra.items():
        flags += [f"--{key.replace('_', '-')}", str(value)]
    return flags


def test_run_compare_report_pipeline(tmp_path, capsys):
    out = tmp_path / "camp"
    assert main(run_flags(out)) == 0
    assert main(run_flags(out, seed=5)) == 0
    traces = [p for p in os.listdir(out) if p.endswith(".jsonl")]
    assert len(traces) == 2

    assert main(["compare", "--in", str(out)]) == 0
    captured = capsys.readouterr().out
    assert "branin:n0:ei:ard" in captured
    assert "best-or-equivalent counts" in captured

    assert main(["report", "--in", str(out), "--format", "csv"]) == 0
    assert (out / "report" / "convergence.csv").exists()
    assert (out / "report" / "summary.txt").exists()


def test_config_file_with_flag_override(tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({
        "function": "branin", "budget": 8, "init-samples": 4,
        "repeats": 1, "seed": 40, "out": str(tmp_path / "from_file"),
        "map-restarts": 2, "acq-pool": 64, "acq-starts": 2,
    }))
    # flag overrides the file's seed
    assert main(["run", "--config", str(cfg_path), "--seed", "41"]) == 0
    names = os.listdir(tmp_path / "from_file")
    assert any("_s41000_" in n for n in names)
    assert not any("_s40000_" in n for n in names)


def test_env_seed_override(tmp_path, monkeypatch):
    out = tmp_path / "env"
    monkeypatch.setenv("GPBO_SEED", "77")
    assert main(run_flags(out, seed=4)) == 0
    assert any("_s77000_" in n for n in os.listdir(out))


def test_unknown_config_key_rejected(tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"functionn": "branin"}))
    with pytest.raises(SystemExit):
        main(["run", "--config", str(cfg_path)])


def test_missing_required_flag(tmp_path):
    with pytest.raises(SystemExit):
        main(["run", "--out", str(tmp_path)])


def test_compare_empty_dir(tmp_path):
    assert main(["compare", "--in", str(tmp_path)]) == 1
