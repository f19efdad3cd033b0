import csv
import json
import subprocess
import sys

import pytest

from inexact_dr import cli, traceio
from inexact_dr.problems import affine_pair_from, gen_lasso
from inexact_dr.traceio import TRACE_COLUMNS, read_trace

IDENTITY = affine_pair_from([[1.0]], [0.0], [[1.0]], [0.0]).to_dict()


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return path


def _run_config(tmp_path, name="run.json", **kw):
    doc = {"problem": {"generator": "lasso", "dim": 20, "seed": 3},
           "solver": {"variant": "FullyInexact", "sigma": 0.3, "nu": 0.6},
           "output_dir": str(tmp_path / "out")}
    doc.update(kw)
    return _write(tmp_path / name, doc)


def _data_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


class TestRun:
    def test_lasso_converges(self, tmp_path, capsys):
        assert cli.main(["run", "--config", str(_run_config(tmp_path))]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["status"] == "converged"
        assert summary["dist_to_oracle"] <= 1e-6
        assert summary["diagnostics"]["passed"]
        assert "converged" in capsys.readouterr().out

    def test_identity_exact_trace_rows(self, tmp_path):
        cfg = _run_config(tmp_path, problem=IDENTITY,
                          solver={"variant": "Exact", "max_iter": 2},
                          start={"z0": [1.0], "w0": [0.0]})
        assert cli.cmd_run(cfg) == 2
        rows = _data_rows(tmp_path / "out" / "trace.csv")
        got = [(float(r["dist_z"]), float(r["dist_w"])) for r in rows]
        assert got == [(0.25, 0.25), (0.125, 0.125)]

    def test_oracle_start(self, tmp_path):
        cfg = _run_config(tmp_path, start="oracle")
        assert cli.cmd_run(cfg) == 0
        assert len(_data_rows(tmp_path / "out" / "trace.csv")) == 1

    def test_inner_exhaustion_exit(self, tmp_path):
        cfg = _run_config(tmp_path, solver={"schedule": {"j_max": 2}})
        assert cli.cmd_run(cfg) == 3

    @pytest.mark.parametrize("solver,field", [
        ({"sigma": 0.7, "nu": 0.6}, "solver.sigma"),
        ({"lambda": "big"}, "solver.lambda"),
        ({"variant": "Nope"}, "solver.variant"),
        ({"tolerance": 1}, "solver.tolerance"),
        ({"schedule": {"mode": "Bogus"}}, "solver.schedule"),
    ])
    def test_malformed_names_field(self, tmp_path, capsys, solver, field):
        assert cli.cmd_run(_run_config(tmp_path, solver=solver)) == 1
        assert field in capsys.readouterr().err

    def test_bad_problem_and_json(self, tmp_path, capsys):
        cfg = _run_config(tmp_path, problem={"generator": "lasso", "dim": -1})
        assert cli.cmd_run(cfg) == 1
        assert "problem" in capsys.readouterr().err
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert cli.cmd_run(bad) == 1

    def test_problem_file_reference(self, tmp_path):
        traceio.write_problem(tmp_path / "p.json", gen_lasso(6, 9, 1))
        cfg = _run_config(tmp_path, problem={"file": "p.json"})
        assert cli.cmd_run(cfg) == 0

    def test_seed_override(self, tmp_path):
        cfg = _run_config(tmp_path)
        assert cli.main(["run", "--config", str(cfg), "--seed", "5",
                         "--out", str(tmp_path / "o5")]) == 0
        assert json.loads((tmp_path / "o5" / "summary.json").read_text())["seed"] == 5


class TestTraceFormat:
    @pytest.fixture
    def out(self, tmp_path):
        cli.cmd_run(_run_config(tmp_path))
        return tmp_path / "out"

    def test_header_and_row_count(self, out):
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[0].startswith("#") and "-1" in lines[0]
        assert lines[1] == ",".join(TRACE_COLUMNS)
        summary = json.loads((out / "summary.json").read_text())
        assert len(lines) - 2 == summary["iterations"]

    def test_read_back(self, out):
        tr = read_trace(out / "trace.csv")
        assert tr.status == "converged" and tr.records[-1].z is not None

    def test_problem_round_trip(self, out, tmp_path):
        text = (out / "problem.json").read_text()
        again = traceio.problem_to_text(traceio.read_problem(out / "problem.json"))
        assert again == text

    def test_bad_header(self, out):
        p = out / "trace.csv"
        p.write_text(p.read_text().replace("dist_w", "distw"))
        with pytest.raises(ValueError, match="header"):
            read_trace(p)


class TestCheck:
    @pytest.fixture
    def out(self, tmp_path):
        cli.cmd_run(_run_config(tmp_path, problem={"generator": "box", "dim": 8,
                                                   "seed": 2}))
        return tmp_path / "out"

    def test_passes(self, out):
        assert cli.main(["check", str(out / "trace.csv"), str(out / "problem.json")]) == 0

    def test_corrupted_iterate(self, out, capsys):
        side = out / "trace.iterates.json"
        doc = json.loads(side.read_text())
        doc["records"][3]["z"] = [v + 1.0 for v in doc["records"][3]["z"]]
        side.write_text(json.dumps(doc))
        assert cli.cmd_check(out / "trace.csv", out / "problem.json") != 0
        assert "failing iterations: 4" in capsys.readouterr().out

    def test_corrupted_csv_distance(self, out, capsys):
        p = out / "trace.csv"
        lines = p.read_text().splitlines()
        cells = lines[4].split(",")
        cells[8] = repr(float(cells[8]) + 1.0)
        lines[4] = ",".join(cells)
        p.write_text("\n".join(lines) + "\n")
        assert cli.cmd_check(p, out / "problem.json") != 0
        assert cells[0] in capsys.readouterr().out

    def test_empty_trace(self, out, capsys):
        p = out / "trace.csv"
        lines = p.read_text().splitlines()[:2]
        p.write_text("\n".join(lines) + "\n")
        side = out / "trace.iterates.json"
        doc = json.loads(side.read_text())
        doc["records"] = []
        side.write_text(json.dumps(doc))
        assert cli.cmd_check(p, out / "problem.json") == 0
        assert "warning" in capsys.readouterr().out

    def test_missing_oracle(self, out):
        doc = json.loads((out / "problem.json").read_text())
        doc["oracle"] = None
        prob = _write(out / "noracle.json", doc)
        assert cli.cmd_check(out / "trace.csv", prob) == 4


class TestSweep:
    def test_invalid_cells_marked(self, tmp_path):
        cfg = _write(tmp_path / "sweep.json", {
            "problem": {"generator": "affine", "dim": 10, "seed": 1},
            "solver": {"variant": "FullyInexact"},
            "grid": {"sigma": [0.1, 0.3], "nu": [0.5, 0.9],
                     "variant": ["FullyInexact", "SemiInexact", "Exact"]},
            "output_dir": str(tmp_path / "sw")})
        assert cli.cmd_sweep(cfg, workers=2) == 0
        rows = list(csv.DictReader((tmp_path / "sw" / "sweep.csv").open()))
        assert len(rows) == 12
        assert all(r["status"] == "converged" for r in rows)
        assert (tmp_path / "sw" / "cell_0000" / "trace.csv").exists()

    def test_single_cell_and_invalid(self, tmp_path):
        cfg = _write(tmp_path / "sweep.json", {
            "problem": {"generator": "affine", "dim": 4, "seed": 1},
            "grid": {"variant": ["Exact"], "sigma": [0.3, 0.7], "nu": [0.6]},
            "output_dir": str(tmp_path / "sw")})
        assert cli.cmd_sweep(cfg) == 0
        rows = list(csv.DictReader((tmp_path / "sw" / "sweep.csv").open()))
        assert [r["status"] for r in rows] == ["converged", "invalid"]

    def test_nothing_converges(self, tmp_path):
        cfg = _write(tmp_path / "sweep.json", {
            "problem": {"generator": "affine", "dim": 4, "seed": 1},
            "solver": {"max_iter": 1},
            "grid": {"variant": ["FullyInexact"]},
            "output_dir": str(tmp_path / "sw")})
        assert cli.cmd_sweep(cfg) == 2

    def test_env_workers(self, tmp_path, monkeypatch):
        cfg = _write(tmp_path / "sweep.json", {
            "problem": {"generator": "affine", "dim": 4, "seed": 1},
            "grid": {"variant": ["Exact"]}, "output_dir": str(tmp_path / "sw")})
        monkeypatch.setenv("INEXACT_DR_WORKERS", "x")
        assert cli.cmd_sweep(cfg) == 1
        monkeypatch.setenv("INEXACT_DR_WORKERS", "2")
        assert cli.cmd_sweep(cfg) == 0


class TestGen:
    def test_stdout_and_file_agree(self, tmp_path, capsys):
        spec = _write(tmp_path / "g.json", {"generator": "lasso", "dim": 5, "seed": 2})
        assert cli.main(["gen", "--config", str(spec)]) == 0
        text = capsys.readouterr().out
        assert cli.main(["gen", "--config", str(spec), "--out",
                         str(tmp_path / "p.json")]) == 0
        assert (tmp_path / "p.json").read_text() == text
        assert json.loads(text)["family"] == "Lasso" and json.loads(text)["dim"] == 5

    def test_bad_generator(self, tmp_path):
        spec = _write(tmp_path / "g.json", {"problem": {"generator": "zzz"}})
        assert cli.cmd_gen(spec) == 1


def test_determinism(tmp_path):
    cfg = _run_config(tmp_path, problem={"generator": "lasso", "dim": 12, "seed": 8})
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")])
    for name in ("trace.csv", "trace.iterates.json", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "inexact_dr.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "sweep" in out.stdout
