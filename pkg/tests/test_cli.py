import json
import subprocess
import sys
from pathlib import Path

import pytest

from hardylab.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_bessel_command(tmp_path):
    cfg = write(tmp_path, 'command = "bessel"\n[numeric]\nW = 1\n')
    assert main(["bessel", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["results"]["first_zero"] == pytest.approx(2.404826, abs=1e-5)
    assert report["config"]["numeric"]["W"] == 1
    assert (tmp_path / "o" / "data.csv").read_text().startswith("r,g\n")


def test_hardy_command_reports_hypotheses(tmp_path):
    out = tmp_path / "o"
    assert main(["hardy", "--config", str(CONFIGS / "hardy_unit_n3.toml"), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert {h["hypothesis"] for h in report["hypotheses"]} >= {"H1i", "H1ii", "H2ii", "H4"}
    assert report["config"]["weight"]["N"] == 3
    assert report["config"]["constants"]["source"] == "auto"
    assert report["results"]["min_relative_slack"] >= 0


@pytest.mark.parametrize(
    "text, key",
    [
        ('[weight]\nN = "three"\n', "N"),
        ('[weight]\nN = 3\ncolour = 1\n', "colour"),
        ('[weight]\nN = 3\n[numeric]\nlevels = 2\n', "levels"),
        ('command = "sharpness"\n[weight]\nN = 3\n', "command"),
        ("[weight\nN = 3\n", "parse"),
    ],
)
def test_bad_config_exits_2(tmp_path, capsys, text, key):
    cfg = write(tmp_path, text)
    assert main(["hardy", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert key in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert main(["check", "--config", str(tmp_path / "nope.toml")]) == 2


def test_expectation_mismatch_exits_1(tmp_path):
    cfg = write(tmp_path, 'command = "bessel"\n[numeric]\nW = 1\n[expect]\npositive_on_unit_ball = false\n')
    assert main(["bessel", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_violation_without_expectations_exits_1(tmp_path):
    # W = 9 puts the first zero at 2.4048/3 < 1
    cfg = write(tmp_path, 'command = "bessel"\n[numeric]\nW = 9\n')
    assert main(["bessel", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_refine_overrides_ladder(tmp_path):
    out = tmp_path / "o"
    main(["sharpness", "--config", str(CONFIGS / "sharpness_unit_n3.toml"), "--out", str(out), "--refine", "2"])
    lines = (out / "data.csv").read_text().splitlines()
    assert lines == ["r_min,n,best_constant", lines[1], lines[2]]
    assert lines[2].startswith("0.001,2048,")


def test_module_entry_point_is_deterministic(tmp_path):
    cfg = CONFIGS / "certificate_gaussian_log.toml"
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}"
        proc = subprocess.run([sys.executable, "-m", "hardylab", "certificate", "--config", str(cfg),
                               "--out", str(out)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(((out / "data.csv").read_bytes(), (out / "report.json").read_bytes()))
    assert outs[0] == outs[1]
