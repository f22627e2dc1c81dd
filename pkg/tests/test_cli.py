import json
import subprocess
import sys

import numpy as np
import pytest

from hybridqudit.cli import main
from hybridqudit.io import read_counts_csv, read_density_matrix


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_distill_csv(workdir, capsys):
    assert main(["distill", "--out", "d.csv"]) == 0
    lines = [ln for ln in (workdir / "d.csv").read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "p,fidelity_no_distill,fidelity_distill,success_probability"
    rows = {round(float(ln.split(",")[0]), 10): [float(x) for x in ln.split(",")] for ln in lines[1:]}
    assert len(rows) == 101
    assert rows[0.2][1] == pytest.approx(0.8, abs=1e-9)
    assert rows[0.2][2] == pytest.approx(0.9412, abs=1e-4)
    assert "distill:" in capsys.readouterr().out


def test_tomo_ghz4(workdir, capsys):
    code = main(["tomo", "--set", "state=ghz4", "--set", "bootstrap_resamples=3", "--seed", "4", "--out", "r.json"])
    assert code == 0
    doc = json.loads((workdir / "r.json").read_text())
    assert doc["fidelity"] >= 0.99
    assert doc["fidelity_stderr"] is not None
    assert read_density_matrix(workdir / "r.json").shape == (16, 16)
    assert "fidelity=" in capsys.readouterr().out


def test_rhom_file(workdir):
    assert main(["rhom", "--set", "n_points=200", "--out", "f.csv"]) == 0
    data = np.loadtxt(workdir / "f.csv", delimiter=",", skiprows=4)
    phi, coinc, classical = data.T
    # coincidence period pi, classical period 2 pi
    assert np.allclose(coinc, np.cos(phi) ** 2)
    assert np.allclose(classical, np.cos(phi / 2) ** 2)
    shift = len(phi) // 2
    assert np.allclose(np.roll(coinc, shift), coinc)
    assert not np.allclose(np.roll(classical, shift), classical)


def test_simulate_then_tomo(workdir):
    assert main(["simulate", "--set", "state=bell-phi-plus", "--seed", "1", "--out", "c.csv"]) == 0
    assert len(read_counts_csv(workdir / "c.csv")) == 36
    code = main([
        "tomo", "--set", "state=bell-phi-plus", "--set", "counts_file=c.csv",
        "--set", "bootstrap_resamples=0", "--out", "r.json",
    ])
    assert code == 0
    assert json.loads((workdir / "r.json").read_text())["fidelity"] > 0.99


def test_entropy(workdir, capsys):
    assert main(["entropy", "--set", "state=hyper"]) == 0
    doc = json.loads((workdir / "entropy.json").read_text())
    assert doc["photon_cut"] == pytest.approx(1.0)
    assert doc["average_qubit"] == pytest.approx(1.0)


def test_chip_state_from_config(workdir):
    cfg = {"state": "chip", "pump": [1, 0, 0, [0, 1]], "visibility": 0.9, "seed": 2, "bootstrap_resamples": 0}
    (workdir / "run.json").write_text(json.dumps(cfg))
    assert main(["tomo", "--config", "run.json", "--out", "r.json"]) == 0
    assert json.loads((workdir / "r.json").read_text())["fidelity"] == pytest.approx(0.95, abs=0.01)


def test_byte_identical_outputs(workdir):
    for name in ("a", "b"):
        assert main(["simulate", "--set", "state=ghz4", "--seed", "9", "--out", f"{name}.csv"]) == 0
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()


class TestErrors:
    def test_unknown_key_line_number(self, workdir, capsys):
        (workdir / "c.json").write_text('{\n  "state": "hyper",\n  "colour": "red"\n}\n')
        assert main(["distill", "--config", "c.json"]) == 2
        assert "c.json:3" in capsys.readouterr().err

    def test_malformed_json(self, workdir, capsys):
        (workdir / "c.json").write_text('{\n  "state": "hyper"\n  "shots": 3\n}\n')
        assert main(["distill", "--config", "c.json"]) == 2
        assert "c.json:3" in capsys.readouterr().err

    def test_bad_value(self, workdir, capsys):
        (workdir / "c.json").write_text('{\n  "shots": -5\n}\n')
        assert main(["simulate", "--config", "c.json", "--seed", "1"]) == 2
        assert "c.json:2" in capsys.readouterr().err

    def test_missing_seed(self, workdir):
        assert main(["simulate"]) == 2

    def test_missing_config_file(self, workdir):
        assert main(["rhom", "--config", "nope.json"]) == 2

    def test_experiment_mismatch(self, workdir):
        assert main(["rhom", "--set", "experiment=distill"]) == 2

    def test_runtime_error(self, workdir, capsys):
        assert main(["tomo", "--set", "counts_file=missing.csv", "--set", "bootstrap_resamples=0"]) == 3
        assert "error" in capsys.readouterr().err

    def test_degenerate_pump(self, workdir):
        cfg = ["--set", "state=chip", "--set", "pump=[1,0,0,0]", "--set", "efficiency=[0,1,1,1]"]
        assert main(["entropy", *cfg]) == 3

    def test_argparse_error(self, workdir):
        with pytest.raises(SystemExit) as exc:
            main(["launch"])
        assert exc.value.code == 2


def test_console_script_runs(workdir):
    out = subprocess.run(
        [sys.executable, "-m", "hybridqudit.cli", "rhom", "--out", "x.csv"],
        capture_output=True, text=True, check=False,
    )
    assert out.returncode == 0
    assert "frequency_ratio=2.000000" in out.stdout
