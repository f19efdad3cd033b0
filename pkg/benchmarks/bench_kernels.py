"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--dim 20] [--repeat 5] [--json out.json]

Prints one line per kernel with the best-of-`repeat` time per call for
each backend and the speedup. Also times a full fully inexact LASSO solve
under each backend, since the solver mixes kernel calls with numpy work.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from inexact_dr import _kernels_py

try:
    from inexact_dr import _kernels as _compiled
except ImportError:
    _compiled = None


def _cases(dim, rng):
    x = rng.standard_normal(dim)
    v = np.clip(rng.standard_normal(dim), -0.5, 0.5)
    lo, hi = -np.ones(dim), np.ones(dim)
    xb = np.clip(x, lo, hi)
    P = rng.standard_normal((2 * dim, dim)) / np.sqrt(2 * dim)
    q = rng.standard_normal(2 * dim)
    z = np.zeros(dim)
    return {
        "soft_threshold": lambda k: k.soft_threshold(x, 0.3),
        "clip_box": lambda k: k.clip_box(x, lo, hi),
        "l1_gap": lambda k: k.l1_gap(x, v, 0.5, 1e-12),
        "box_gap": lambda k: k.box_gap(xb, v, lo, hi, 1e-12),
        "l1_selection": lambda k: k.l1_selection(x, v, 0.5),
        "box_selection": lambda k: k.box_selection(xb, v, lo, hi),
        "lasso_gap": lambda k: k.lasso_gap(P, q, 0.1, z),
        "lasso_cd": lambda k: k.lasso_cd(P, q, 0.1, z, 100_000, 1e-12),
    }


def _best(fn, repeat):
    n, _ = timeit.Timer(fn).autorange()
    return min(timeit.Timer(fn).repeat(repeat, n)) / n


_SOLVE = """
import time
from inexact_dr import kernels, problems, drsolve
inst = problems.gen_lasso(20, 40, 3)
z0, w0 = problems.default_start(inst)
cfg = drsolve.SolverConfig(variant="FullyInexact")
best = float("inf")
for _ in range(5):
    t = time.perf_counter()
    drsolve.run(inst.A, inst.B, z0, w0, cfg)
    best = min(best, time.perf_counter() - t)
print(kernels.BACKEND, best)
"""


def _solve_time(pure):
    env = dict(os.environ, INEXACT_DR_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", _SOLVE], env=env, check=True,
                         capture_output=True, text=True).stdout.split()
    return out[0], float(out[1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", metavar="PATH", help="also write results as JSON")
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; run `pip install -e . "
              "--no-build-isolation` first")
        return 1
    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':16} {'python (us)':>12} {'compiled (us)':>14} {'speedup':>8}")
    for name, fn in _cases(args.dim, rng).items():
        tp = _best(lambda: fn(_kernels_py), args.repeat) * 1e6
        tc = _best(lambda: fn(_compiled), args.repeat) * 1e6
        rows.append({"kernel": name, "python_us": tp, "compiled_us": tc})
        print(f"{name:16} {tp:12.2f} {tc:14.2f} {tp / tc:8.1f}x")
    solves = {}
    for pure in (True, False):
        backend, secs = _solve_time(pure)
        solves[backend] = secs
    print(f"{'lasso solve':16} {solves['python'] * 1e6:12.0f} "
          f"{solves['compiled'] * 1e6:14.0f} "
          f"{solves['python'] / solves['compiled']:8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"dim": args.dim, "kernels": rows, "solve_s": solves}, fh,
                      indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
