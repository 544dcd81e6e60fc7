"""Command-line driver: exit codes, artifacts, determinism."""

import numpy as np
import pytest

from ma_lab.cli import main

SOLVE_CMA = """\
command = solve-cma
grid.n = 1
grid.points = 16
path.steps = 3
solution.modes = cos:1,0:0.05
"""


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_solve_cma_writes_artifacts(tmp_path):
    cfg = _write(tmp_path, SOLVE_CMA)
    out = tmp_path / "out"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[0].startswith("t,newton_iterations,residual_sup")
    assert len(trace) == 5  # header + schedule 0, 1/3, 2/3, 1
    assert (out / "phi.csv").exists()
    summary = (out / "summary.txt").read_text()
    assert "sup_error_vs_solution" in summary
    assert "final_residual_sup" in summary


def test_unknown_key_is_rejected(tmp_path, capsys):
    cfg = _write(tmp_path, SOLVE_CMA.replace("path.steps", "path.stepz"))
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "path.stepz" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    code = main(["--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_solution_and_twist_modes_conflict(tmp_path, capsys):
    cfg = _write(tmp_path, SOLVE_CMA + "twist.modes = cos:1,0:0.01\n")
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "exactly one" in capsys.readouterr().err


def test_twist_floor_violation(tmp_path, capsys):
    text = """\
command = solve-j
grid.n = 2
grid.points = 12
twist.modes = cos:1,0,0,0:-0.2
twist.normalize = true
"""
    cfg = _write(tmp_path, text)
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "admissible" in capsys.readouterr().err


def test_seed_and_threads_reproduce_bytes(tmp_path, monkeypatch):
    cfg = _write(tmp_path, SOLVE_CMA)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["--config", cfg, "--out", str(out), "--seed", "5",
                     "--threads", "2"]) == 0
        outs.append(out)
    for artifact in ("trace.csv", "phi.csv"):
        assert (outs[0] / artifact).read_bytes() == (outs[1] / artifact).read_bytes()
    # env fallback carries the same value
    monkeypatch.setenv("MA_LAB_THREADS", "2")
    out = tmp_path / "c"
    assert main(["--config", cfg, "--out", str(out), "--seed", "5"]) == 0
    assert (out / "trace.csv").read_bytes() == (outs[0] / "trace.csv").read_bytes()


def test_bad_thread_count(tmp_path, capsys, monkeypatch):
    cfg = _write(tmp_path, SOLVE_CMA)
    assert main(["--config", cfg, "--out", str(tmp_path / "o"), "--threads", "0"]) == 2
    assert "thread count" in capsys.readouterr().err
    monkeypatch.setenv("MA_LAB_THREADS", "many")
    assert main(["--config", cfg, "--out", str(tmp_path / "o2")]) == 2
    assert "MA_LAB_THREADS" in capsys.readouterr().err


def test_gma_twist_floor(tmp_path, capsys):
    # the compatibility shift recentres the mean-zero mode by +0.7 here,
    # leaving the normalized minimum at -0.3, under the default floor
    text = """\
command = solve-gma
grid.n = 2
grid.points = 12
gma.coeffs = 0.3
twist.modes = cos:1,0,0,0:-1.0
"""
    cfg = _write(tmp_path, text)
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "gma.twist_floor" in capsys.readouterr().err
    # a shallower twist clears the default floor and solves, and the same
    # data trips again once the user tightens the floor
    mild = text.replace("-1.0", "-0.72") + "path.steps = 3\n"
    ok = _write(tmp_path, mild, name="mild.cfg")
    assert main(["--config", ok, "--out", str(tmp_path / "o2")]) == 0
    tight = _write(tmp_path, mild + "gma.twist_floor = 0.01\n", name="tight.cfg")
    assert main(["--config", tight, "--out", str(tmp_path / "o3")]) == 2
    assert "gma.twist_floor" in capsys.readouterr().err


def test_check_cone_command(tmp_path, capsys):
    text = """\
command = check-cone
cone.lam = 0.8, 1.4, 2.0
cone.f = 1.2
cone.c = 3.0
"""
    cfg = _write(tmp_path, text)
    out = tmp_path / "cone"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    assert "status = " in capsys.readouterr().out
    rows = (out / "cone_check.csv").read_text().splitlines()
    assert rows[0] == "direction,lam,partial_sum,slack,slack_floor"
    assert len(rows) == 4


def test_glue_demo_and_violation(tmp_path, capsys):
    cfg = _write(tmp_path, "command = glue-demo\nglue.n = 1\n")
    out = tmp_path / "glue"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    assert (out / "glued.csv").exists()

    bad = _write(tmp_path, "command = glue-demo\nglue.n = 1\nglue.violate = true\n",
                 name="bad.cfg")
    assert main(["--config", bad, "--out", str(tmp_path / "g2")]) == 2
    assert "r^2/100" in capsys.readouterr().err


def test_lelong_command(tmp_path, capsys):
    cfg = _write(tmp_path, "command = lelong\nlelong.member = cone_2\n")
    out = tmp_path / "lelong"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    assert (out / "lelong_cone_2.csv").exists()
    assert "nu = 2" in capsys.readouterr().out

    bad = _write(tmp_path, "command = lelong\nlelong.member = nope\n", name="bad.cfg")
    assert main(["--config", bad, "--out", str(tmp_path / "l2")]) == 2
    assert "cone_2" in capsys.readouterr().err  # lists the known members


def test_abp_demo_command(tmp_path):
    text = """\
command = abp-demo
abp.points = 96
abp.count = 2
"""
    cfg = _write(tmp_path, text)
    out = tmp_path / "abp"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    table = (out / "abp.csv").read_text().splitlines()
    assert table[0].startswith("member,epsilon,contact_measure")
    assert len(table) == 4  # model + two members
    summary = (out / "summary.txt").read_text()
    assert "model_ratio" in summary
    assert "min_ratio" in summary
