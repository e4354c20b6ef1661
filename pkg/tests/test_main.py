import json

import pandas as pd
import pytest

from levitodyn import config
from levitodyn.main import run


def run_json(capsys, argv):
    """Run a command line and parse the JSON document it prints."""
    code = run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def write_config(tmp_path, raw):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    return str(path)


def test_freqs_json(capsys):
    code, result = run_json(capsys, ["freqs", "--json"])
    assert code == 0
    assert result["status"] == "ok"
    assert result["omega_theta_Hz"] == pytest.approx(1.26e6, rel=0.02)
    assert result["omega_y_Hz"] == pytest.approx(220e3, rel=0.02)
    assert result["flags"] == []


def test_usage_errors_exit_2(capsys):
    code, result = run_json(capsys, ["teleport"])
    assert code == 2
    assert result == {"status": "error", "error": "config_error", "message": result["message"]}

    code, result = run_json(capsys, ["sweep", "--axis", "colour:1:2:3"])
    assert code == 2
    assert "sweepable" in result["message"]


def test_missing_config_exits_2(capsys, tmp_path):
    code, result = run_json(capsys, ["freqs", "--config", str(tmp_path / "none.json")])
    assert code == 2
    assert result["error"] == "config_error"


def test_invariant_violations(capsys, tmp_path):
    path = write_config(tmp_path, {"particle": {"rx": 40e-9, "ry": 50e-9}})

    code, result = run_json(capsys, ["validate", "--config", path])
    assert code == 1
    assert result["status"] == "invalid"
    assert any("ordering" in v for v in result["violations"])

    code, result = run_json(capsys, ["freqs", "--config", path, "--json"])
    assert code == 1
    assert result["error"] == "domain_error"


def test_validate_reports_warnings(capsys, tmp_path):
    path = write_config(tmp_path, {"gas": {"pressure": 133322.0}})
    code, result = run_json(capsys, ["validate", "--config", path])
    assert code == 0
    assert any("free-molecular" in w for w in result["warnings"])


def test_damping_pressure_sweep_csv(capsys, tmp_path):
    out = tmp_path / "damping.csv"
    assert run(["damping", "--pressure-sweep", "1e-6:1e2:5", "--out", str(out)]) == 0
    df = pd.read_csv(out)
    assert list(df.columns) == config.DAMPING_COLUMNS
    assert len(df) == 5
    assert (tmp_path / "damping.csv.manifest.json").exists()


def test_torque_json(capsys):
    code, result = run_json(capsys, ["torque", "--json"])
    assert code == 0
    assert 1e-29 <= result["M_min_per_rtHz"] <= 4e-29


def test_cool_json(capsys):
    code, result = run_json(capsys, [
        "cool", "--config", str(config.CONFIGS_DIR / "paper_fig4.json"),
        "--cavity-length", "0.5e-3", "--drive-sweep", "1e4:1e8:41", "--log", "--json",
    ])
    assert code == 0
    assert result["ground_state_window"]["y"] is None
    assert result["ground_state_window"]["theta"] is not None
    assert result["cavity_length_m"] == 0.5e-3


def test_figures_manifest_and_replay(capsys, tmp_path):
    out = tmp_path / "fig3b.csv"
    assert run(["figures", "3b", "--out", str(out), "--gnuplot"]) == 0
    capsys.readouterr()
    manifest_path = tmp_path / "fig3b.csv.manifest.json"
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    assert manifest["status"] == "completed"
    assert set(manifest["outputs"]) == {str(out), str(out.with_suffix(".gp"))}
    assert manifest["seeds"] == {"master_seed": config.DEFAULT_SEED}

    code, result = run_json(capsys, ["replay", "--manifest", str(manifest_path)])
    assert code == 0
    assert result["status"] == "ok"
    assert result["mismatched"] == []

    manifest["outputs"][str(out)] = "0" * 64
    manifest_path.write_text(json.dumps(manifest), encoding="utf-8")
    code, result = run_json(capsys, ["replay", "--manifest", str(manifest_path)])
    assert code == 1
    assert result["status"] == "mismatch"
    assert result["mismatched"] == [str(out)]


def test_figure_4b_summary_file(capsys, tmp_path):
    out = tmp_path / "fig4b.csv"
    assert run(["figures", "4b", "--out", str(out), "--cavity-length", "0.5e-3"]) == 0
    summary = json.loads((tmp_path / "fig4b.summary.json").read_text(encoding="utf-8"))
    assert summary["ground_state_window"]["y"] is None
    assert pd.read_csv(out).shape == (71, len(config.COOL_COLUMNS))


def test_unknown_figure_exits_2(capsys):
    code, result = run_json(capsys, ["figures", "9z", "--json"])
    assert code == 2
    assert "valid ids" in result["message"]


def test_fit_with_too_few_bins(capsys, tmp_path):
    spec = tmp_path / "spec.csv"
    pd.DataFrame({"freq_Hz": [1e3 * i for i in range(1, 6)], "psd": [1.0, 2.0, 5.0, 2.0, 1.0]}).to_csv(spec, index=False)
    code, result = run_json(capsys, ["fit", "--in", str(spec), "--json"])
    assert code == 1
    assert result["error"] == "fit_error"


def test_simulate_psd_fit_pipeline(capsys, tmp_path):
    traj, spec = tmp_path / "traj.csv", tmp_path / "spec.csv"
    assert run(["simulate", "--pressure", "13332", "--steps", "65536", "--seed", "1", "--out", str(traj)]) == 0
    assert run(["psd", "--in", str(traj), "--col", "theta_rad", "--segment", "4096", "--out", str(spec)]) == 0
    capsys.readouterr()

    code, result = run_json(capsys, ["fit", "--in", str(spec), "--band", "0.6e6:1.9e6", "--json"])
    assert code == 0
    assert result["omega_Hz"] == pytest.approx(1.2636e6, rel=0.03)
    assert result["gamma_rads"] > 0

    manifest = json.loads((tmp_path / "traj.csv.manifest.json").read_text(encoding="utf-8"))
    assert manifest["seeds"]["trajectory"] == {"entropy": 1, "spawn_key": []}
