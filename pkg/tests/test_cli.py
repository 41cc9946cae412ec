"""End-to-end CLI runs in a subprocess: exit codes, outputs, determinism."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

FLIP_PROFILE = "1.0, -0.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0"


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "adiabatic_continuum", *args],
        capture_output=True,
        text=True,
    )


def test_help_exits_zero():
    result = run_cli("--help")
    assert result.returncode == 0
    assert "simulate" in result.stdout
    assert "verify" in result.stdout


def test_missing_config_flag_is_usage_error():
    result = run_cli("simulate")
    assert result.returncode == 2
    assert "--config" in result.stderr


def test_simulate_writes_reports(write_config, tmp_path):
    cfg = write_config({"run": {"T": "20.0", "steps": "512"}})
    out = tmp_path / "sim"
    result = run_cli("simulate", "--config", str(cfg), "--out", str(out))
    assert result.returncode == 0, result.stderr
    assert "outputs written to" in result.stdout
    report = json.loads((out / "report.json").read_text())
    assert report["command"] == "simulate"
    assert report["leakage"]["T"] == 20.0
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved == report["resolved_config"]


def test_simulate_steps_override_lands_in_record(write_config, tmp_path):
    cfg = write_config({"run": {"T": "20.0"}})
    out = tmp_path / "sim"
    result = run_cli("simulate", "--config", str(cfg), "--out", str(out), "--steps", "640")
    assert result.returncode == 0, result.stderr
    report = json.loads((out / "report.json").read_text())
    assert report["resolved_config"]["run"]["steps"] == 640


def test_criterion_exit_reflects_threshold(write_config, tmp_path):
    cfg = write_config({})
    assert run_cli("criterion", "--config", str(cfg), "--out", str(tmp_path / "a")).returncode == 4
    ok = run_cli("criterion", "--config", str(cfg), "--out", str(tmp_path / "b"), "--threshold", "19")
    assert ok.returncode == 0
    assert "satisfied" in ok.stdout


def test_bands_feasible_and_infeasible(write_config, tmp_path):
    feasible = write_config({"run": {"T": "1500.0"}, "analysis": {"margin": "100.0"}})
    result = run_cli("bands", "--config", str(feasible), "--out", str(tmp_path / "ok"))
    assert result.returncode == 0, result.stderr

    hopeless = write_config({"run": {"T": "15.0"}, "analysis": {"margin": "100.0"}},
                            name="hopeless.cfg")
    result = run_cli("bands", "--config", str(hopeless), "--out", str(tmp_path / "bad"))
    assert result.returncode == 6
    # the plan is still persisted for inspection
    report = json.loads((tmp_path / "bad" / "report.json").read_text())
    assert report["plan"]["selected_m"] is None


def test_simulate_whole_grid_band_has_no_exterior(write_config, tmp_path):
    cfg = write_config({"bands": {"m": "16"}, "run": {"T": "20.0", "steps": "512"}})
    result = run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert result.returncode == 5
    assert "no exterior" in result.stderr


def test_crossing_aborts_before_outputs(write_config, tmp_path):
    cfg = write_config({"dispersion": {"family": "tabulated", "params": FLIP_PROFILE}})
    out = tmp_path / "o"
    result = run_cli("simulate", "--config", str(cfg), "--out", str(out))
    assert result.returncode == 3
    assert "crossing" in result.stderr
    assert not out.exists()


def test_missing_section_names_it(write_config, tmp_path):
    cfg = write_config({"grid": None})
    result = run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert result.returncode == 2
    assert "grid" in result.stderr


def test_unknown_key_is_rejected(write_config, tmp_path):
    cfg = write_config({"run": {"tsteps": "100"}})
    result = run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert result.returncode == 2
    assert "tsteps" in result.stderr


def test_verify_fails_on_sabotaged_steps(write_config, tmp_path):
    cfg = write_config({})
    result = run_cli("verify", "--config", str(cfg), "--out", str(tmp_path / "o"),
                     "--steps", "10")
    assert result.returncode == 1
    assert "[FAIL] intertwining" in result.stdout


def test_sweep_requires_duration_list(write_config, tmp_path):
    scalar = write_config({})
    result = run_cli("sweep", "--config", str(scalar), "--out", str(tmp_path / "o"))
    assert result.returncode == 2
    assert "T_list" in result.stderr

    short = write_config({"run": {"T": None, "T_list": "20, 40", "steps": "256"}},
                         name="short.cfg")
    result = run_cli("sweep", "--config", str(short), "--out", str(tmp_path / "p"))
    assert result.returncode == 2


def test_sweep_outputs_identical_across_jobs(write_config, tmp_path):
    cfg = write_config({"run": {"T": None, "T_list": "20, 30, 40", "steps": "256"}})
    out = tmp_path / "same"
    names = ("report.json", "sweep.csv", "resolved_config.json")

    first = run_cli("sweep", "--config", str(cfg), "--out", str(out), "--jobs", "1")
    assert first.returncode == 0, first.stderr
    serial = {name: (out / name).read_bytes() for name in names}

    second = run_cli("sweep", "--config", str(cfg), "--out", str(out), "--jobs", "2")
    assert second.returncode == 0, second.stderr
    for name in names:
        assert (out / name).read_bytes() == serial[name]


def test_rejected_jobs_value(write_config, tmp_path):
    cfg = write_config({"run": {"T": None, "T_list": "20, 30, 40", "steps": "256"}})
    result = run_cli("sweep", "--config", str(cfg), "--out", str(tmp_path / "o"),
                     "--jobs", "0")
    assert result.returncode == 2
    assert "--jobs" in result.stderr
