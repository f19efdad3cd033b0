"""Run and sweep configuration files (JSON).

A run configuration looks like::

    {
      "problem": {"generator": "lasso", "dim": 20, "seed": 3},
      "solver": {"variant": "FullyInexact", "lambda": 1.0, "sigma": 0.3,
                 "nu": 0.6, "max_iter": 5000, "stop_tol": 1e-8,
                 "schedule": {"mode": "ResidualOnly", "j_max": 1000000}},
      "start": "default",
      "output_dir": "out",
      "diagnostics": true
    }

``problem`` is a generator spec, ``{"file": path}`` (relative to the
config file) or an inline problem document. ``start`` is ``"default"``,
``"oracle"`` or ``{"z0": [...], "w0": [...]}``. A sweep configuration adds
``"grid"`` with lists under ``variant``, ``mode``, ``lambda``, ``sigma`` and
``nu``, plus an optional ``"workers"`` count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .drsolve import SolverConfig
from .inner import RefinementSchedule
from .problems import ProblemInstance, default_start, generate

__all__ = ["ConfigError", "RunConfig", "SweepConfig", "load_json",
           "parse_problem", "parse_solver", "parse_run_config",
           "parse_sweep_config", "resolve_start", "GRID_KEYS"]

_SOLVER_KEYS = {"variant", "lambda", "sigma", "nu", "max_iter", "stop_tol",
                "schedule"}
_SCHEDULE_KEYS = {"mode", "j_max", "damping_base"}
_RUN_KEYS = {"problem", "solver", "start", "output_dir", "diagnostics"}
GRID_KEYS = ("variant", "mode", "lambda", "sigma", "nu")


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending field."""


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: "
                          f"{exc.msg}") from None


def _require_dict(obj, name):
    if not isinstance(obj, dict):
        raise ConfigError(f"{name} must be an object")
    return obj


def _unknown(d, allowed, prefix):
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{prefix}{extra[0]}: unknown field")


@dataclass
class RunConfig:
    problem: ProblemInstance
    solver: SolverConfig
    start: object = "default"
    output_dir: str = "out"
    diagnostics: bool = True


@dataclass
class SweepConfig:
    problem: ProblemInstance
    base: dict
    grid: dict
    output_dir: str = "sweep_out"
    workers: int | None = None
    cells: list = field(default_factory=list)


def parse_problem(spec, base_dir=".", seed=None):
    """Build a ProblemInstance from a generator spec, file reference or document."""
    spec = _require_dict(spec, "problem")
    try:
        if "generator" in spec:
            spec = dict(spec)
            if seed is not None:
                spec["seed"] = int(seed)
            return generate(spec)
        if "file" in spec:
            _unknown(spec, {"file"}, "problem.")
            path = Path(base_dir) / spec["file"]
            return ProblemInstance.from_dict(load_json(path))
        return ProblemInstance.from_dict(spec)
    except ConfigError:
        raise
    except ValueError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith("problem") else
                          f"problem: {msg}") from None


def _number(d, key, prefix, cast=float):
    try:
        v = cast(d[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{prefix}{key}: expected a number, "
                          f"got {d[key]!r}") from None
    if isinstance(d[key], bool):
        raise ConfigError(f"{prefix}{key}: expected a number, got {d[key]!r}")
    return v


def parse_solver(d):
    """SolverConfig from the ``solver`` object; errors name the field."""
    d = _require_dict(d, "solver")
    _unknown(d, _SOLVER_KEYS, "solver.")
    kw = {}
    for key, attr, cast in (("lambda", "lam", float), ("sigma", "sigma", float),
                            ("nu", "nu", float), ("max_iter", "max_iter", int),
                            ("stop_tol", "stop_tol", float)):
        if key in d:
            kw[attr] = _number(d, key, "solver.", cast)
    if "variant" in d:
        kw["variant"] = d["variant"]
    sched = _require_dict(d.get("schedule", {}), "solver.schedule")
    _unknown(sched, _SCHEDULE_KEYS, "solver.schedule.")
    skw = {}
    if "mode" in sched:
        skw["mode"] = sched["mode"]
    if "j_max" in sched:
        skw["j_max"] = _number(sched, "j_max", "solver.schedule.", int)
    if "damping_base" in sched:
        skw["damping_base"] = _number(sched, "damping_base", "solver.schedule.")
    try:
        kw["schedule"] = RefinementSchedule(**skw)
    except ValueError as exc:
        raise ConfigError(f"solver.schedule: {exc}") from None
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        msg = str(exc)
        fieldname = ("variant" if "variant" in msg else
                     "sigma/nu" if "sigma" in msg else
                     "lambda" if "lambda" in msg else
                     "max_iter" if "max_iter" in msg else "stop_tol")
        raise ConfigError(f"solver.{fieldname}: {msg}") from None


def _parse_start(start):
    if start in ("default", "oracle"):
        return start
    if isinstance(start, dict):
        _unknown(start, {"z0", "w0"}, "start.")
        if "z0" not in start:
            raise ConfigError("start.z0: missing")
        return start
    raise ConfigError("start: expected 'default', 'oracle' or {z0, w0}")


def parse_run_config(d, base_dir=".", seed=None, output_dir=None):
    d = _require_dict(d, "config")
    _unknown(d, _RUN_KEYS, "")
    if "problem" not in d:
        raise ConfigError("problem: missing")
    problem = parse_problem(d["problem"], base_dir, seed)
    solver = parse_solver(d.get("solver", {}))
    start = _parse_start(d.get("start", "default"))
    diag = d.get("diagnostics", True)
    if not isinstance(diag, bool):
        raise ConfigError("diagnostics: expected true or false")
    out = output_dir or d.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigError("output_dir: expected a path string")
    return RunConfig(problem, solver, start, out, diag)


def resolve_start(instance, start):
    """Starting ``(z0, w0)`` for a parsed ``start`` entry."""
    if start == "default":
        return default_start(instance)
    if start == "oracle":
        if instance.oracle is None:
            raise ConfigError("start: 'oracle' requested but the problem "
                              "has no oracle")
        return instance.oracle.z_star, instance.oracle.w_star
    try:
        z0 = np.asarray(start["z0"], dtype=np.float64).reshape(-1)
        w0 = np.asarray(start.get("w0", np.zeros(z0.size)),
                        dtype=np.float64).reshape(-1)
    except (TypeError, ValueError):
        raise ConfigError("start: z0 and w0 must be numeric lists") from None
    if z0.size != instance.dim:
        raise ConfigError(f"start.z0: expected {instance.dim} entries, "
                          f"got {z0.size}")
    if w0.size != instance.dim:
        raise ConfigError(f"start.w0: expected {instance.dim} entries, "
                          f"got {w0.size}")
    return z0, w0


def parse_sweep_config(d, base_dir=".", seed=None, output_dir=None):
    d = _require_dict(d, "config")
    _unknown(d, {"problem", "solver", "grid", "output_dir", "workers"}, "")
    if "problem" not in d:
        raise ConfigError("problem: missing")
    problem = parse_problem(d["problem"], base_dir, seed)
    base = _require_dict(d.get("solver", {}), "solver")
    parse_solver(base)
    grid = _require_dict(d.get("grid", {}), "grid")
    _unknown(grid, GRID_KEYS, "grid.")
    for key, vals in grid.items():
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"grid.{key}: expected a non-empty list")
    workers = d.get("workers")
    if workers is not None and (not isinstance(workers, int) or workers < 1):
        raise ConfigError("workers: expected a positive integer")
    out = output_dir or d.get("output_dir", "sweep_out")
    return SweepConfig(problem, base, grid, out, workers)
