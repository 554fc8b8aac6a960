import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from sgtumor import cli
from sgtumor.fieldio import read_field
from sgtumor.kernel import StepError

SMALL = ["--set", "a=-1.6", "--set", "b=1.6", "--set", "dx=0.2"]


def run(*args):
    return cli.main(list(args))


def test_help_exits_zero():
    out = subprocess.run([sys.executable, "-m", "sgtumor", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "study" in out.stdout
    with pytest.raises(SystemExit) as info:
        cli.main(["run", "--help"])
    assert info.value.code == 0


def test_list_parsers():
    assert cli.parse_int_list("1..4") == [1, 2, 3, 4]
    assert cli.parse_int_list("1, 3") == [1, 3]
    assert cli.parse_float_list("0.1,0.5") == [0.1, 0.5]


@pytest.mark.parametrize("method", ["det", "sg", "sc"])
def test_small_runs(tmp_path, method):
    out = tmp_path / method
    code = run("run", "--scenario", "testII", *SMALL, "--method", method, "--K", "3", "--nz", "4",
               "--T", "0.01", "--snapshots", "0.005", "--out", str(out), "--csv")
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["order"] == 2 and summary["snapshots"] == [0.005, 0.01]
    mean = read_field(out / "fields" / "rho_mean_t0.0100.sgf", (16, 16))
    sd = read_field(out / "fields" / "rho_sd_t0.0100.sgf")
    assert mean.max() > 0.1 and sd.min() >= 0
    assert (out / "fields" / "rho_mean_t0.0100.csv").exists()
    with open(out / "slices.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 16 and float(rows[0]["x"]) == -0.3


def test_species_runs(tmp_path):
    for method in ("species-sg", "species-sc"):
        out = tmp_path / method
        assert run("run", "--scenario", "testIII", *SMALL, "--method", method, "--K", "2",
                   "--nz", "3", "--T", "0.004", "--out", str(out)) == 0
        assert (out / "fields" / "D_sd_t0.0040.sgf").exists()


def test_config_file_and_conflicts(tmp_path):
    cfg = tmp_path / "a.cfg"
    cfg.write_text("scenario = testII\na = -1.6\nb = 1.6\ndx = 0.2\nT = 0.004\n")
    assert run("run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--K", "1") == 0
    assert run("run", "--config", str(cfg), "--scenario", "testIa", "--out", str(tmp_path / "o")) == 2


@pytest.mark.parametrize("args", [
    ["run", "--out", "x"],
    ["run", "--scenario", "testII", "--set", "m=1.0"],
    ["run", "--scenario", "testII", "--set", "bogus=1"],
    ["run", "--scenario", "testII", "--set", "noequals"],
    ["run", "--scenario", "testIb", "--K", "4", "--set", "T=0"],
    ["run", "--scenario", "testII", "--method", "species-sg"],
    ["run", "--config", "/nonexistent.cfg"],
])
def test_config_errors_exit_2(tmp_path, args, capsys):
    assert run(*args, "--out", str(tmp_path / "o")) == 2
    assert "configuration error" in capsys.readouterr().err


def test_solver_failure_exit_3(tmp_path, monkeypatch, capsys):
    def boom(self, **kw):
        raise StepError("prediction solve did not converge", 1.0)

    monkeypatch.setattr(cli.StochasticGalerkin, "run", boom)
    assert run("run", "--scenario", "testII", *SMALL, "--out", str(tmp_path)) == 3
    assert "solver failure" in capsys.readouterr().err


def test_runs_are_deterministic(tmp_path):
    for tag in ("a", "b"):
        assert run("run", "--scenario", "testIa", *SMALL, "--K", "3", "--T", "0.01",
                   "--out", str(tmp_path / tag)) == 0
    for name in ("rho_mean_t0.0100.sgf", "rho_sd_t0.0100.sgf"):
        a = (tmp_path / "a" / "fields" / name).read_bytes()
        assert a == (tmp_path / "b" / "fields" / name).read_bytes()
    assert (tmp_path / "a" / "slices.csv").read_text() == (tmp_path / "b" / "slices.csv").read_text()


def test_studies(tmp_path, capsys):
    out = tmp_path / "s"
    assert run("study", "k-convergence", "--scenario", "testII", *SMALL, "--K", "1..3",
               "--nz", "4", "--T", "0.005", "--out", str(out)) == 0
    assert "Error_SD" in capsys.readouterr().out
    with open(out / "k_convergence.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["K"]) for r in rows] == [1, 2, 3]
    assert run("study", "m-sweep", "--scenario", "testII", *SMALL, "--m", "2,4,8", "--K", "2",
               "--T", "0.004", "--out", str(out)) == 0
    text = (out / "m_sweep.csv").read_text().splitlines()
    assert text[0] == "m,l1_diff_to_2m" and len(text) == 3
    assert run("study", "timing", "--scenario", "testII", *SMALL, "--K", "2", "--nz", "2",
               "--T", "0.002", "--repeats", "1", "--out", str(out)) == 0
    rows = list(csv.DictReader(open(out / "timing.csv")))
    assert np.isfinite(float(rows[0]["ratio"]))
