import csv
import json
import subprocess
import sys

import pytest

from stein_hellinger import config as C
from stein_hellinger.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main


def write_cfg(tmp_path, **over):
    d = json.loads(C.default_config().to_json())
    d.update(over)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(d, indent=2))
    return str(p)


def test_bound_schema_and_determinism(tmp_path, capsys):
    assert main(["bound", "--out", str(tmp_path / "a")]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["bound", "--out", str(tmp_path / "b")]) == EXIT_OK
    capsys.readouterr()
    a = (tmp_path / "a" / "bound.json").read_bytes()
    assert a == (tmp_path / "b" / "bound.json").read_bytes() and a.decode() == first
    reports = json.loads(a)
    assert [r["n"] for r in reports] == [100, 400, 1600]
    for r in reports:
        assert {"kappa", "alpha", "Bn", "beta", "beta0", "total", "terms"} <= set(r)
        assert r["total"] == pytest.approx(r["beta"] + r["beta0"])
    totals = [r["total"] for r in reports]
    assert all(b < a for a, b in zip(totals, totals[1:]))


def test_verify_single_module(tmp_path, capsys):
    assert main(["verify", "--only", "hermite", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert all(l.startswith("PASS hermite.") for l in out[:-1]) and out[-1] == "2/2 properties passed"
    assert (tmp_path / "verify.txt").read_text().splitlines() == out


def test_verify_detects_wrong_R(tmp_path, capsys):
    cfg = write_cfg(tmp_path, kernel={"kind": "chaos", "R": 0.5})
    assert main(["verify", "--only", "ustat", "--config", cfg]) == EXIT_FAIL
    assert "FAIL ustat.kernel_bound_R" in capsys.readouterr().out


def test_verify_unknown_module(capsys):
    assert main(["verify", "--only", "nope"]) == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "reps": 10,\n  "seed": ,\n}')
    assert main(["bound", "--config", str(p)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.startswith(f"error: {p}: line 3:")


def test_sweep_rejects_small_reps(tmp_path, capsys):
    assert main(["sweep", "--config", write_cfg(tmp_path, reps=10)]) == EXIT_CONFIG
    assert "reps" in capsys.readouterr().err


def test_svg_needs_out(capsys):
    assert main(["bound", "--svg"]) == EXIT_CONFIG


def test_sweep_small(tmp_path, capsys):
    cfg = write_cfg(tmp_path, reps=2000, n_grid=[20, 40])
    out = tmp_path / "out"
    code = main(["sweep", "--config", cfg, "--out", str(out), "--svg"])
    assert code in (EXIT_OK, EXIT_FAIL)
    rows = list(csv.reader((out / "sweep.csv").read_text().splitlines()))
    assert rows[0] == ["n", "H_hat", "H_err", "bound_total_over_sqrt2", "ratio", "pass"]
    assert [r[0] for r in rows[1:]] == ["20", "40"]
    assert (code == EXIT_OK) == all(r[5] == "true" for r in rows[1:])
    svg = (out / "sweep.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
    again = tmp_path / "again"
    main(["sweep", "--config", cfg, "--out", str(again), "--svg"])
    assert (again / "sweep.csv").read_bytes() == (out / "sweep.csv").read_bytes()
    assert (again / "sweep.svg").read_bytes() == (out / "sweep.svg").read_bytes()


def test_tail_small(tmp_path, capsys):
    cfg = write_cfg(tmp_path, reps=5000, n_grid=[30])
    out = tmp_path / "out"
    assert main(["tail", "--config", cfg, "--out", str(out), "--seed", "5"]) in (EXIT_OK, EXIT_FAIL)
    lines = (out / "tail_n30.csv").read_text().splitlines()
    assert lines[0] == "u,phi_c,empirical,lower,upper,pass"
    assert len(lines) == 12 and lines[-1].startswith("# n=30 h=")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "stein_hellinger", "verify", "--only", "concentration"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "properties passed" in r.stdout
    r = subprocess.run([sys.executable, "-m", "stein_hellinger", "frobnicate"], capture_output=True, text=True)
    assert r.returncode == 2
