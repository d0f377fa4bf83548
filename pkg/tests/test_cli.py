import json
import subprocess
import sys

import numpy as np
import pytest

from sqbellman import cli
from sqbellman.envelope import Grid2D
from sqbellman.suites import SuiteConfig, parse_grid


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constant_values_and_warning(capsys):
    code, out, err = run(capsys, "constant", "--alpha", "2,4,1.5")
    assert code == 0
    doc = json.loads(out)
    rows = {r["alpha"]: r for r in doc["results"]}
    assert rows[2.0]["c_alpha"] == pytest.approx(1.0, abs=1e-10)
    assert rows[4.0]["c_alpha"] == pytest.approx(0.7419637843, abs=1e-9)
    assert "warning" in rows[1.5] and "warning" in err
    assert doc["config"]["suite"] == "constant"


def test_eval_both_functions(capsys):
    _, out, _ = run(capsys, "eval", "davis", "0,1", "--alpha", "3")
    assert json.loads(out)["results"][0]["U"] == pytest.approx(0.96023762672, abs=1e-9)
    _, out, _ = run(capsys, "eval", "bollobas", "0,1")
    assert json.loads(out)["results"][0]["B"] == pytest.approx(0.683921995, abs=1e-8)


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("BELLMAN_SEED", "77")
    _, out, _ = run(capsys, "eval", "bollobas", "0,1")
    assert json.loads(out)["config"]["seed"] == 77
    _, out, _ = run(capsys, "eval", "bollobas", "0,1", "--seed", "5")
    assert json.loads(out)["config"]["seed"] == 5


def test_verify_writes_reports_and_config(tmp_path, capsys):
    code, _, _ = run(capsys, "verify", "bollobas", "--out", str(tmp_path), "--format", "csv")
    assert code == 0
    rows = (tmp_path / "reports.csv").read_text().splitlines()
    assert rows[0].startswith("name,passed,worst_violation")
    cfg = SuiteConfig.load(tmp_path / "config.json")
    assert cfg.suite == "bollobas" and cfg.format == "csv"


def test_verify_exit_status_reflects_failures(capsys, monkeypatch):
    from sqbellman import suites
    from sqbellman.reports import VerificationReport

    monkeypatch.setattr(suites, "run_suite", lambda cfg: [VerificationReport("bad", -1.0)])
    code, out, _ = run(capsys, "verify", "davis")
    assert code == 1
    assert json.loads(out)["results"][0]["passed"] is False


def test_envelope_dump_round_trips(tmp_path, capsys):
    code, _, _ = run(capsys, "envelope", "bollobas", "--grid", "x:-2,2,41 l:0,2,41", "--out", str(tmp_path))
    assert code == 0
    grid = Grid2D.load(tmp_path / "grid.txt")
    assert grid.values.shape == (41, 41) and grid.names == ("x", "l")
    res = json.loads((tmp_path / "envelope.json").read_text())
    assert res["solve"]["converged"]


def test_oracle_and_mc(capsys):
    _, out, _ = run(capsys, "oracle", "bollobas", "0,1", "--depth", "3")
    res = json.loads(out)["results"]
    assert res["bound"] == "upper" and res["value"] >= res["closed_form"]
    code, out, _ = run(capsys, "mc", "ratio", "--paths", "200", "--dt", "1e-3", "--format", "csv")
    assert code == 0 and out.splitlines()[1].startswith("a,alpha")


def test_bad_input_exit_code(capsys):
    code, _, err = run(capsys, "mc", "hitting", "--a", "0", "--paths", "10")
    assert code == 2 and "error" in err


def test_grid_parser():
    axes = parse_grid("p:-3,3,401 q:0,3,401")
    assert list(axes) == ["p", "q"] and axes["p"].n == 401
    with pytest.raises(ValueError):
        parse_grid("p:-3,3,401")


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "sqbellman.cli", "constant", "--alpha", "3"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["results"][0]["c_alpha"] == pytest.approx(0.8424178241647807, rel=1e-12)
