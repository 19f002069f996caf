import csv
import io
import json
import subprocess
import sys

import pytest

from blisterlab import cli
from blisterlab.core import QuadratureError

EVAL = ["eval-1d", "--family", "periodic", "--h", "1e-3", "--eta", "0.01", "--alpha-s", "0.1",
        "--theta", "0.5"]


def _run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _csv_body(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_eval_1d_json(capsys):
    code, out, _ = _run(EVAL, capsys)
    assert code == 0
    doc = json.loads(out)
    assert {"membrane", "bending", "substrate", "total", "params", "flags", "version",
            "config"} <= set(doc)
    assert doc["total"] == pytest.approx(doc["membrane"] + doc["bending"] + doc["substrate"])
    assert doc["config"]["family"] == "periodic1d" and doc["params"]["theta"] == 0.5


@pytest.mark.parametrize("fam", ["flat", "single"])
def test_eval_1d_other_families(capsys, fam):
    code, out, _ = _run(["eval-1d", "--family", fam, "--h", "0.01", "--eta", "0.1",
                         "--alpha-s", "1"], capsys)
    assert code == 0
    if fam == "flat":
        assert json.loads(out)["total"] == pytest.approx(1e-4)


def test_unknown_command_exit_1(capsys):
    code, _, err = _run(["bogus"], capsys)
    assert code == 1 and "unknown command" in err and "usage" in err


@pytest.mark.parametrize("argv", [
    ["eval-1d", "--theta", "2"],
    ["eval-1d", "--h", "notanumber"],
    ["eval-1d", "--family", "lattice2d"],
    ["sweep", "--family", "periodic1d"],  # missing --vary/--from/--to
    ["phase", "--grid", "64by64"],
    ["eval-2d", "--h", "0.5", "--eta", "0.01", "--alpha-s", "0.1"],  # lattice preconditions fail
])
def test_validation_errors_exit_1(capsys, argv):
    assert _run(argv, capsys)[0] == 1


def test_numerical_failure_exit_2(capsys, monkeypatch):
    def boom(cfg):
        raise QuadratureError("non-finite integrand on piece [0.0, 1.0]")
    monkeypatch.setitem(cli.HANDLERS, "eval-1d", boom)
    code, _, err = _run(["eval-1d"], capsys)
    assert code == 2 and "numerical failure" in err


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# periodic run\nfamily = periodic\nh = 1e-3\neta = 0.01\nalpha-s = 0.1\n"
                   "theta = 0.25\n")
    code, out, _ = _run(["eval-1d", "--config", str(cfg)], capsys)
    assert code == 0 and json.loads(out)["params"]["theta"] == 0.25
    code, out, _ = _run(["eval-1d", "--config", str(cfg), "--theta", "0.5"], capsys)
    assert code == 0 and json.loads(out)["params"]["theta"] == 0.5
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert _run(["eval-1d", "--config", str(bad)], capsys)[0] == 1
    assert _run(["eval-1d", "--config", str(tmp_path / "missing.cfg")], capsys)[0] == 1


def test_sweep_csv_columns(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = _run(["sweep", "--family", "periodic1d", "--vary", "h", "--from", "1e-6",
                       "--to", "1e-4", "--points", "5", "--eta", "0.01", "--alpha-s", "0.01",
                       "--out", str(out)], capsys)
    assert code == 0
    text = out.read_text()
    assert text.startswith("# blisterlab ")
    config = json.loads(text.splitlines()[1][len("# config: "):])
    assert config["vary"] == "h" and config["points"] == 5
    rows = _csv_body(text)
    assert list(rows[0]) == ["h", "eta", "alpha_s", "alpha_m", "theta", "membrane", "bending",
                             "substrate", "total", "flags"]
    assert len(rows) == 5 and float(rows[0]["h"]) == pytest.approx(1e-6)


def test_fit_json(capsys):
    code, out, _ = _run(["fit", "--family", "periodic1d", "--vary", "eta", "--from", "1e-4",
                         "--to", "1e-1", "--points", "6", "--h", "1e-6", "--alpha-s", "0.01"],
                        capsys)
    doc = json.loads(out)
    assert code == 0 and doc["exponent"] == pytest.approx(5 / 3, abs=0.05)
    assert {"prefactor", "r2", "excluded", "rows", "config", "version"} <= set(doc)


def test_fit_insufficient_data_exit_1(capsys):
    # the lattice fails its preconditions everywhere at large h: no valid rows
    code, _, err = _run(["fit", "--family", "lattice", "--vary", "h", "--from", "1e-3",
                         "--to", "1e-2", "--points", "4", "--eta", "1e-3", "--alpha-s", "1e-8"],
                        capsys)
    assert code == 1 and "valid rows" in err


def test_minimize_json(capsys):
    code, out, _ = _run(["minimize", "--h", "3e-4", "--eta", "0.01", "--alpha-s", "0.01",
                         "--points", "1", "--grid", "128"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["n_blisters"] == 1 and doc["total"] > 0


def test_phase_csv(capsys):
    code, out, _ = _run(["phase", "--grid", "16x12", "--h", "1e-6"], capsys)
    assert code == 0
    rows = _csv_body(out)
    assert len(rows) == 16 * 12
    assert list(rows[0]) == ["alpha_s", "eta", "h", "alpha_m", "theta", "upper_flat",
                             "upper_single", "upper_lattice", "winner", "region", "winner_raw",
                             "region_raw", "flags"]
    assert {r["region"] for r in rows} == {"A", "B", "C"}
    config = json.loads(out.splitlines()[1][len("# config: "):])
    assert config["constants"]["K6"] > 1 and set(config["components"]) == {"A", "B", "C"}


def test_phase_constants_from_config(tmp_path, capsys):
    cfg = tmp_path / "k.cfg"
    cfg.write_text("K6 = 1.0\n")
    code, out, _ = _run(["phase", "--grid", "8x8", "--h", "1e-6", "--config", str(cfg)], capsys)
    config = json.loads(out.splitlines()[1][len("# config: "):])
    assert code == 0 and config["constants"]["K6"] == 1.0


def test_workers_env_var(monkeypatch, capsys):
    monkeypatch.setenv("BLISTERLAB_WORKERS", "2")
    code, out, _ = _run(EVAL, capsys)
    assert code == 0 and json.loads(out)["config"]["workers"] == 2
    code, out, _ = _run([*EVAL, "--workers", "1"], capsys)
    assert json.loads(out)["config"]["workers"] == 1


def test_byte_identical_outputs(tmp_path, capsys):
    out = tmp_path / "o.json"
    argv = ["minimize", "--h", "3e-4", "--eta", "0.01", "--alpha-s", "0.01", "--points", "2",
            "--grid", "128", "--seed", "7", "--out", str(out)]
    assert _run(argv, capsys)[0] == 0
    first = out.read_bytes()
    assert _run(argv, capsys)[0] == 0
    assert out.read_bytes() == first


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "blisterlab", *EVAL], capture_output=True,
                          text=True, timeout=120)
    assert proc.returncode == 0 and json.loads(proc.stdout)["total"] > 0
    proc = subprocess.run([sys.executable, "-m", "blisterlab", "nope"], capture_output=True,
                          text=True, timeout=120)
    assert proc.returncode == 1
