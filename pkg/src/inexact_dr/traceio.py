"""File formats: problem JSON, trace CSV with iterate sidecar, run summary.

All writers go through :func:`atomic_write`, so a reader never sees a
half-written file. Floats in the trace CSV use 17 significant digits;
JSON files are written with sorted keys so equal content gives equal
bytes.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .drsolve import IterationRecord
from .problems import ProblemInstance

__all__ = ["TRACE_COLUMNS", "atomic_write", "dumps_json", "problem_to_text",
           "write_problem", "read_problem", "write_trace", "read_trace",
           "sidecar_path", "write_summary", "Trace"]

TRACE_COLUMNS = ("k", "delta", "rho", "t", "r_norm", "s_norm", "eps", "mu",
                 "dist_z", "dist_w")
_SIDECAR_FIELDS = ("aw_sq", "xz_norm", "bw_norm", "inner_index")
_VECTOR_FIELDS = ("z", "w", "y", "a", "x", "b")


def atomic_write(path, text):
    """Write `text` to `path` via a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def problem_to_text(instance):
    return dumps_json(instance.to_dict())


def write_problem(path, instance):
    atomic_write(path, problem_to_text(instance))


def read_problem(path):
    with open(path, encoding="utf-8") as fh:
        return ProblemInstance.from_dict(json.load(fh))


def _g17(x):
    return "%.17g" % x


def sidecar_path(trace_path):
    p = Path(trace_path)
    return p.with_name(p.stem + ".iterates.json")


def _vlist(v):
    return None if v is None else np.asarray(v, dtype=np.float64).tolist()


def write_trace(path, result, meta=None):
    """Write ``trace.csv`` and its ``.iterates.json`` sidecar for a run.

    The CSV holds one row per iteration; the sidecar carries what the
    replay diagnostics need beyond the CSV columns (starting point,
    ``||lam*(a_k + w_{k-1})||^2``, final iterates and, for small
    dimensions, every iterate vector).
    """
    cfg = result.config
    buf = io.StringIO()
    buf.write(f"# dist_z,dist_w are -1 when no oracle is available; "
              f"variant={cfg.variant} lambda={cfg.lam!r} "
              f"sigma={cfg.sigma!r} nu={cfg.nu!r} "
              f"mode={cfg.schedule.mode}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in result.records:
        writer.writerow([rec.k] + [_g17(getattr(rec, c)) for c in TRACE_COLUMNS[1:]])
    side = {
        "meta": dict(meta or {}),
        "config": cfg.to_dict(),
        "status": result.status,
        "z0": _vlist(result.z0),
        "w0": _vlist(result.w0),
        "final": {f: _vlist(getattr(result, f)) for f in _VECTOR_FIELDS},
        "records": [
            dict({f: getattr(rec, f) for f in _SIDECAR_FIELDS},
                 **{f: _vlist(getattr(rec, f)) for f in _VECTOR_FIELDS
                    if getattr(rec, f) is not None})
            for rec in result.records
        ],
    }
    atomic_write(path, buf.getvalue())
    atomic_write(sidecar_path(path), dumps_json(side))


class Trace:
    """A trace read back from disk: records plus the sidecar data."""

    def __init__(self, records, config, status, z0, w0, final):
        self.records = records
        self.config = config
        self.status = status
        self.z0 = z0
        self.w0 = w0
        self.final = final


def read_trace(path):
    """Parse a trace CSV and its sidecar into a :class:`Trace`.

    Raises
    ------
    ValueError
        If the header is wrong, the sidecar is missing, or the two files
        disagree on the number of records.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
    if not lines or tuple(lines[0].split(",")) != TRACE_COLUMNS:
        raise ValueError(f"{path}: trace header must be {','.join(TRACE_COLUMNS)}")
    rows = list(csv.reader(lines[1:]))
    sp = sidecar_path(path)
    if not sp.exists():
        raise ValueError(f"{path}: missing iterate sidecar {sp.name}")
    with open(sp, encoding="utf-8") as fh:
        side = json.load(fh)
    if len(side["records"]) != len(rows):
        raise ValueError(f"{path}: {len(rows)} rows but sidecar has "
                         f"{len(side['records'])} records")
    records = []
    for row, extra in zip(rows, side["records"]):
        if len(row) != len(TRACE_COLUMNS):
            raise ValueError(f"{path}: malformed row {row}")
        vals = dict(zip(TRACE_COLUMNS, row))
        kw = {c: float(vals[c]) for c in TRACE_COLUMNS[1:]}
        kw["k"] = int(vals["k"])
        kw.update({f: extra[f] for f in _SIDECAR_FIELDS})
        kw["inner_index"] = int(kw["inner_index"])
        for f in _VECTOR_FIELDS:
            if extra.get(f) is not None:
                kw[f] = np.asarray(extra[f], dtype=np.float64)
        records.append(IterationRecord(**kw))
    final = {f: None if v is None else np.asarray(v, dtype=np.float64)
             for f, v in side.get("final", {}).items()}
    return Trace(records, side["config"], side.get("status"),
                 np.asarray(side["z0"], dtype=np.float64),
                 np.asarray(side["w0"], dtype=np.float64), final)


def write_summary(path, summary):
    atomic_write(path, dumps_json(summary))
