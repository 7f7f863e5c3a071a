import json
import subprocess
import sys

import pytest

from eventeraser import harness
from eventeraser.cli import main, parse_grid
from eventeraser.harness import ConfigError

SMALL = ["--phi-points", "8", "--events", "1600", "--two-theta1-grid", "0:90:45"]


def test_parse_grid():
    assert parse_grid("0:90:5") == [5.0 * k for k in range(19)]
    assert parse_grid("0, 22.5,45") == [0.0, 22.5, 45.0]
    for bad in ("0:90", "0:90:0", "a,b"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_run_writes_outputs(tmp_path, capsys):
    code = main(["run", "--preset", "fig4b-qwp-xi45", *SMALL, "--tolerance", "1.0",
                 "--out", str(tmp_path), "--gamma-format", "csv"])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["fig4b-qwp-xi45_counts.csv", "fig4b-qwp-xi45_curve.csv", "fig4b-qwp-xi45_gamma.csv",
                     "fig4b-qwp-xi45_manifest.json"]
    assert len(harness.read_curve(tmp_path / "fig4b-qwp-xi45_curve.csv")) == 3


def test_run_exit_code_on_failure(tmp_path):
    # a tiny budget cannot meet a tiny tolerance
    assert main(["run", "--preset", "fig3a-pureV-10", *SMALL, "--tolerance", "1e-6",
                 "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("argv", [
    ["run", "--preset", "nope"],
    ["run", "--preset", "fig3b-mixed", "--xi", "45"],
    ["run", "--gamma", "1.5"],
    ["run", "--two-theta1-grid", "0:10"],
    ["run", "--config", "/nonexistent/config.yaml"],
    ["run", "--preset", "bare-mzi"],
    ["frobnicate"],
    ["run", "--analyzed-port", "5"],
])
def test_config_errors_exit_2(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] == "run" else argv) == 2


def test_output_dir_error_exit_2(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert main(["run", *SMALL, "--out", str(blocker / "x")]) == 2


def test_compare_and_rerun(tmp_path, capsys):
    assert main(["run", "--preset", "fig3c-partial", *SMALL, "--tolerance", "1.0", "--out", str(tmp_path)]) == 0
    man = tmp_path / "fig3c-partial_manifest.json"
    assert main(["compare", str(man), "--rerun"]) == 0
    assert "byte-identical" in capsys.readouterr().out
    # a tampered curve fails both the tolerance and the rerun check
    curve = tmp_path / "fig3c-partial_curve.csv"
    lines = curve.read_text().splitlines()
    t, v_sim, v_or, _ = lines[1].split(",")
    lines[1] = f"{t},{float(v_or) + 0.5},{v_or},0.5"
    curve.write_text("\n".join(lines) + "\n")
    assert main(["compare", str(man), "--tolerance", "0.03"]) == 1
    assert main(["compare", str(man), "--tolerance", "1.0", "--rerun"]) == 1


def test_compare_bad_manifest(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{not json")
    assert main(["compare", str(p)]) == 2


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("preset: fig3b-mixed\nseed: 4\ntwo_theta1_grid: [0, 45]\nevents_per_point: 800\n"
                   "phi_grid: [0, 45, 90, 135, 180, 225, 270, 315]\ntolerance: 1.0\n")
    assert main(["run", "--config", str(cfg), "--seed", "9", "--out", str(tmp_path)]) == 0
    man = json.loads((tmp_path / "fig3b-mixed_manifest.json").read_text())
    assert man["spec"]["seed"] == 9 and man["spec"]["two_theta1_grid"] == [0, 45]


def test_custom_source_flags(tmp_path):
    assert main(["run", "--preset", "custom", "--p-v", "0.25", "--group-size", "50", "--theta-qwp", "10",
                 *SMALL, "--tolerance", "1.0", "--out", str(tmp_path)]) == 0
    spec = json.loads((tmp_path / "custom_manifest.json").read_text())["spec"]
    assert spec["source"] == {"kind": "mixed", "p_v": 0.25, "p_h": 0.75, "n_v": 50, "n_h": 50, "psi0_deg": 0.0}
    assert spec["theta_qwp"] == 10.0


def test_events_per_phi(tmp_path):
    assert main(["run", "--phi-points", "8", "--events-per-phi", "100", "--two-theta1-grid", "45",
                 "--tolerance", "1.0", "--out", str(tmp_path)]) == 0
    spec = json.loads((tmp_path / "fig3a-pureV-45_manifest.json").read_text())["spec"]
    assert spec["events_per_point"] == 800


def test_oracle_command(capsys, tmp_path):
    assert main(["oracle", "--preset", "fig3a-pureV-10", "--two-theta1-grid", "0"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "two_theta1_deg,v_oracle"
    assert float(out[1].split(",")[1]) == pytest.approx(0.9981, abs=5e-5)
    dest = tmp_path / "mzi.csv"
    assert main(["oracle", "--preset", "bare-mzi", "--phi-grid", "0,180", "--out", str(dest)]) == 0
    lines = dest.read_text().splitlines()
    assert lines[0] == "phi_deg,p0,p1"
    rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
    assert rows == [pytest.approx([0, 0, 1], abs=1e-15), pytest.approx([180, 1, 0], abs=1e-15)]


def test_mzi_command(capsys):
    assert main(["mzi", "--phi-grid", "0,90,180", "--events-per-phi", "100000"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "eventeraser", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "run" in res.stdout
    res = subprocess.run([sys.executable, "-m", "eventeraser", "run", "--preset", "nope"],
                         capture_output=True, text=True)
    assert res.returncode == 2 and "nope" in res.stderr
