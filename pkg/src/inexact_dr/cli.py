"""Command-line experiment runner: ``inexact-dr run|check|sweep|gen``.

Exit codes
----------
run
    0 converged, 2 iteration limit reached, 3 inner search exhausted,
    1 malformed configuration.
check
    0 all diagnostics pass (or empty trace), 1 failures or unreadable
    input, 4 problem has no oracle.
sweep
    0 when at least one cell converged, 2 otherwise, 1 malformed config.
gen
    0 on success, 1 malformed spec.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics, drsolve, traceio
from .config import (GRID_KEYS, ConfigError, load_json, parse_problem,
                     parse_run_config, parse_solver, parse_sweep_config,
                     resolve_start)
from .problems import ProblemInstance

__all__ = ["main", "build_parser", "cmd_run", "cmd_check", "cmd_sweep",
           "cmd_gen", "summarize"]

EXIT_OK, EXIT_CONFIG, EXIT_MAX_ITER, EXIT_INNER, EXIT_NO_ORACLE = 0, 1, 2, 3, 4
_STATUS_EXIT = {"converged": EXIT_OK, "max_iter": EXIT_MAX_ITER,
                "inner_exhausted": EXIT_INNER}


def _err(msg):
    print(f"inexact-dr: error: {msg}", file=sys.stderr)


def _dist_to_box_intersection(instance, z):
    lo = np.maximum(instance.A.lower, instance.B.lower)
    hi = np.minimum(instance.A.upper, instance.B.upper)
    return float(np.linalg.norm(z - np.clip(z, lo, hi)))


def summarize(instance, result, report=None):
    """JSON-ready summary of a run; contains nothing time-dependent."""
    last = result.records[-1] if result.records else None
    out = {
        "family": instance.family,
        "dim": instance.dim,
        "seed": instance.seed,
        "config": result.config.to_dict(),
        "status": result.status,
        "iterations": result.iterations,
        "final_rho": None if last is None else last.rho,
        "message": result.message,
    }
    if instance.oracle is not None:
        dz = float(np.linalg.norm(result.z - instance.oracle.z_star))
        dw = float(np.linalg.norm(result.w - instance.oracle.w_star))
        out.update(dist_z=dz, dist_w=dw, dist_to_oracle=max(dz, dw))
    if instance.family == "BoxFeasibility":
        out["dist_to_intersection"] = _dist_to_box_intersection(instance, result.z)
    if report is not None:
        out["diagnostics"] = {"passed": report.passed,
                              "failing_iterations": report.failing_iterations,
                              "warnings": report.warnings}
    return out


def _replay_result(instance, result):
    cfg = result.config
    final = (result.z, result.w) if result.converged else None
    return diagnostics.replay(
        result.records, cfg.variant, cfg.sigma, cfg.nu, cfg.lam, result.z0,
        result.w0, instance.oracle, instance.A, instance.B, final=final,
        membership_tol=100.0 * cfg.stop_tol)


def _execute(instance, solver, start, out_dir, with_diagnostics):
    z0, w0 = resolve_start(instance, start)
    result = drsolve.run(instance.A, instance.B, z0, w0, solver,
                         reference=instance.oracle)
    out = Path(out_dir)
    traceio.write_trace(out / "trace.csv", result,
                        meta={"family": instance.family, "seed": instance.seed})
    traceio.write_problem(out / "problem.json", instance)
    report = _replay_result(instance, result) if with_diagnostics else None
    if report is not None:
        traceio.atomic_write(out / "report.txt", report.to_text() + "\n")
    summary = summarize(instance, result, report)
    traceio.write_summary(out / "summary.json", summary)
    return result, summary


def cmd_run(config_path, out=None, seed=None):
    """Run one configured solve; returns the process exit code."""
    try:
        cfg = parse_run_config(load_json(config_path),
                               base_dir=Path(config_path).parent, seed=seed,
                               output_dir=out)
        result, summary = _execute(cfg.problem, cfg.solver, cfg.start,
                                   cfg.output_dir, cfg.diagnostics)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    line = f"{result.status}: {result.iterations} iterations"
    if summary.get("final_rho") is not None:
        line += f", final rho {summary['final_rho']:.3e}"
    if "dist_to_oracle" in summary:
        line += f", distance to oracle {summary['dist_to_oracle']:.3e}"
    print(line)
    if result.message:
        print(result.message)
    return _STATUS_EXIT[result.status]


def cmd_check(trace_path, problem_path):
    """Replay all diagnostics over a stored trace against a problem file."""
    try:
        instance = traceio.read_problem(problem_path)
    except (OSError, ValueError) as exc:
        _err(f"cannot load problem {problem_path}: {exc}")
        return EXIT_CONFIG
    if instance.oracle is None:
        _err("problem has no oracle solution; cannot run Fejer checks")
        return EXIT_NO_ORACLE
    try:
        trace = traceio.read_trace(trace_path)
    except (OSError, ValueError, KeyError) as exc:
        _err(f"cannot load trace {trace_path}: {exc}")
        return EXIT_CONFIG
    solver = parse_solver(trace.config)
    final = None
    if trace.status == "converged" and trace.final.get("z") is not None:
        final = (trace.final["z"], trace.final["w"])
    report = diagnostics.replay(
        trace.records, solver.variant, solver.sigma, solver.nu, solver.lam,
        trace.z0, trace.w0, instance.oracle, instance.A, instance.B,
        final=final, membership_tol=100.0 * solver.stop_tol)
    print(report.to_text())
    if report.failures:
        print("failing iterations: "
              + ",".join(str(k) for k in report.failing_iterations))
        return EXIT_CONFIG
    return EXIT_OK


def _cell_solver(base, cell):
    d = dict(base)
    d["schedule"] = dict(base.get("schedule", {}))
    for key in ("variant", "lambda", "sigma", "nu"):
        if key in cell:
            d[key] = cell[key]
    if "mode" in cell:
        d["schedule"]["mode"] = cell["mode"]
    return d


def _run_cell(args):
    problem_doc, solver_doc, out_dir = args
    instance = ProblemInstance.from_dict(problem_doc)
    try:
        solver = parse_solver(solver_doc)
        result, summary = _execute(instance, solver, "default", out_dir, False)
    except Exception as exc:  # a failing cell is recorded, not fatal
        return {"status": "error", "message": str(exc)}
    return summary


def _workers(flag, cfg_value):
    if flag is not None:
        return max(1, int(flag))
    env = os.environ.get("INEXACT_DR_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"INEXACT_DR_WORKERS: expected an integer, "
                              f"got {env!r}") from None
    return cfg_value or 1


_SWEEP_COLUMNS = ("cell", "variant", "mode", "lambda", "sigma", "nu", "status",
                  "iterations", "final_rho", "dist_z", "dist_w", "message")


def cmd_sweep(config_path, out=None, seed=None, workers=None):
    """Run the cross product of the grid and write ``sweep.csv``."""
    try:
        cfg = parse_sweep_config(load_json(config_path),
                                 base_dir=Path(config_path).parent, seed=seed,
                                 output_dir=out)
        n_workers = _workers(workers, cfg.workers)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    keys = [k for k in GRID_KEYS if k in cfg.grid]
    cells = [dict(zip(keys, combo))
             for combo in itertools.product(*(cfg.grid[k] for k in keys))]
    problem_doc = cfg.problem.to_dict()
    out_dir = Path(cfg.output_dir)
    jobs, rows = [], []
    for i, cell in enumerate(cells):
        solver_doc = _cell_solver(cfg.base, cell)
        defaults = drsolve.SolverConfig()
        sigma = solver_doc.get("sigma", defaults.sigma)
        nu = solver_doc.get("nu", defaults.nu)
        row = {"cell": i,
               "variant": solver_doc.get("variant", defaults.variant),
               "mode": solver_doc["schedule"].get("mode", defaults.schedule.mode),
               "lambda": solver_doc.get("lambda", defaults.lam),
               "sigma": sigma, "nu": nu}
        rows.append(row)
        if not (isinstance(sigma, (int, float)) and isinstance(nu, (int, float))
                and sigma < nu):
            row.update(status="invalid", message="requires sigma < nu")
            continue
        jobs.append((i, (problem_doc, solver_doc, str(out_dir / f"cell_{i:04d}"))))
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_cell, [a for _, a in jobs]))
    else:
        results = [_run_cell(a) for _, a in jobs]
    for (i, _), res in zip(jobs, results):
        rows[i].update(status=res["status"], message=res.get("message", ""),
                       iterations=res.get("iterations", ""),
                       final_rho=res.get("final_rho", ""),
                       dist_z=res.get("dist_z", ""), dist_w=res.get("dist_w", ""))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, _SWEEP_COLUMNS, restval="",
                            lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("%.17g" % v if isinstance(v, float) else v)
                         for k, v in row.items()})
    traceio.atomic_write(out_dir / "sweep.csv", buf.getvalue())
    converged = sum(r["status"] == "converged" for r in rows)
    print(f"{len(rows)} cells, {converged} converged; table at "
          f"{out_dir / 'sweep.csv'}")
    return EXIT_OK if converged else EXIT_MAX_ITER


def cmd_gen(config_path, out=None, seed=None):
    """Emit a problem file from a generator spec (bare or under ``problem``)."""
    try:
        spec = load_json(config_path)
        if isinstance(spec, dict) and "problem" in spec:
            spec = spec["problem"]
        instance = parse_problem(spec, Path(config_path).parent, seed)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    text = traceio.problem_to_text(instance)
    if out:
        traceio.atomic_write(out, text)
    else:
        sys.stdout.write(text)
    if instance.note:
        print(f"note: {instance.note}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="inexact-dr",
        description="Inexact Douglas-Rachford experiment runner.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one configured solve")
    r.add_argument("--config", required=True, metavar="PATH")
    r.add_argument("--out", metavar="DIR", help="override output_dir")
    r.add_argument("--seed", type=int, help="override the generator seed")

    c = sub.add_parser("check", help="replay diagnostics over a trace")
    c.add_argument("trace", metavar="TRACE")
    c.add_argument("problem", metavar="PROBLEM")

    s = sub.add_parser("sweep", help="run a parameter grid")
    s.add_argument("--config", required=True, metavar="PATH")
    s.add_argument("--out", metavar="DIR")
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int, metavar="N",
                   help="concurrent cells (default: $INEXACT_DR_WORKERS or 1)")

    g = sub.add_parser("gen", help="write a problem file from a generator spec")
    g.add_argument("--config", required=True, metavar="PATH")
    g.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    g.add_argument("--seed", type=int)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out, args.seed)
    if args.command == "check":
        return cmd_check(args.trace, args.problem)
    if args.command == "sweep":
        return cmd_sweep(args.config, args.out, args.seed, args.workers)
    return cmd_gen(args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
