"""Test problem families with independently computed extended solutions.

Oracles never use Douglas-Rachford: affine pairs use a direct linear
solve, LASSO uses cyclic coordinate descent followed by a support-restricted
linear solve, and box feasibility uses the explicit centre of the common
box.

Random numbers come from :class:`XorShift64Star`, which is fully specified
so that instances can be regenerated bit-for-bit in any language:

* seeding: the 64-bit state is the first output of SplitMix64 applied
  to ``seed`` (a zero state is replaced by ``0x9E3779B97F4A7C15``);
* step: ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27`` (mod 2**64), output
  ``x * 0x2545F4914F6CDD1D mod 2**64``;
* uniform in ``[0, 1)``: ``(out >> 11) * 2**-53``;
* standard normal: Box-Muller with ``u1 = 1 - uniform()``,
  ``u2 = uniform()``, returning ``sqrt(-2 ln u1) * cos(2 pi u2)`` (one draw
  per pair of uniforms);
* matrices are filled row-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .operators import (AffinePD, ExtendedSolution, GradQuadratic, NormalCone,
                        SubdiffL1, op_from_dict)

__all__ = ["XorShift64Star", "ProblemInstance", "FAMILIES", "gen_affine_pair",
           "affine_pair_from", "gen_lasso", "lasso_from", "lasso_oracle",
           "gen_box_feasibility", "box_from", "generate", "default_start"]

FAMILIES = ("AffinePair", "Lasso", "BoxFeasibility")

_MASK = (1 << 64) - 1


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


class XorShift64Star:
    """xorshift64* generator; see the module docstring for the exact algorithm."""

    def __init__(self, seed):
        s = _splitmix64(int(seed) & _MASK)
        self.state = s if s else 0x9E3779B97F4A7C15

    def next_u64(self):
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK

    def uniform(self, size=None, low=0.0, high=1.0):
        if size is None:
            return low + (high - low) * ((self.next_u64() >> 11) * 2.0 ** -53)
        n = int(np.prod(size))
        out = np.array([(self.next_u64() >> 11) * 2.0 ** -53 for _ in range(n)])
        return (low + (high - low) * out).reshape(size)

    def normal(self, size=None):
        def one():
            u1 = 1.0 - (self.next_u64() >> 11) * 2.0 ** -53
            u2 = (self.next_u64() >> 11) * 2.0 ** -53
            return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        if size is None:
            return one()
        n = int(np.prod(size))
        return np.array([one() for _ in range(n)]).reshape(size)


@dataclass
class ProblemInstance:
    A: object
    B: object
    family: str
    seed: int = 0
    oracle: ExtendedSolution | None = None
    params: dict = field(default_factory=dict)
    note: str = ""

    @property
    def dim(self):
        return self.A.dim

    def to_dict(self):
        d = {
            "family": self.family,
            "dim": self.dim,
            "seed": self.seed,
            "params": dict(self.params),
            "A": self.A.to_dict(),
            "B": self.B.to_dict(),
            "oracle": None if self.oracle is None else {
                "z_star": self.oracle.z_star.tolist(),
                "w_star": self.oracle.w_star.tolist(),
            },
        }
        if self.note:
            d["note"] = self.note
        return d

    @classmethod
    def from_dict(cls, d):
        try:
            A = op_from_dict(d["A"])
            B = op_from_dict(d["B"])
            fam = d["family"]
        except KeyError as exc:
            raise ValueError(f"problem file missing field {exc.args[0]!r}") from None
        if fam not in FAMILIES:
            raise ValueError(f"unknown problem family {fam!r}")
        if A.dim != B.dim or ("dim" in d and d["dim"] != A.dim):
            raise ValueError("operator dimensions disagree in problem file")
        o = d.get("oracle")
        oracle = None if o is None else ExtendedSolution(o["z_star"], o["w_star"])
        return cls(A, B, fam, int(d.get("seed", 0)), oracle,
                   dict(d.get("params", {})), d.get("note", ""))


def _random_spd(rng, dim, condition):
    G = rng.normal((dim, dim))
    Q, R = np.linalg.qr(G)
    Q = Q * np.where(np.diag(R) < 0, -1.0, 1.0)
    evals = np.geomspace(1.0, condition, dim) if dim > 1 else np.ones(1)
    M = (Q * evals) @ Q.T
    return 0.5 * (M + M.T)


def affine_pair_from(M_A, c_A, M_B, c_B, S_A=None, S_B=None, seed=0, params=None):
    """Affine pair with oracle ``z* = -(K_A + K_B)^{-1}(c_A + c_B)``."""
    A = AffinePD(M_A, S_A, c_A)
    B = AffinePD(M_B, S_B, c_B)
    z = -np.linalg.solve(A.linear_part() + B.linear_part(), A.c + B.c)
    w = B.apply(z)
    return ProblemInstance(A, B, "AffinePair", seed, ExtendedSolution(z, w),
                           params or {})


def gen_affine_pair(dim, seed, condition=10.0, skew=0.0):
    if dim < 1 or condition < 1:
        raise ValueError("need dim >= 1 and condition >= 1")
    rng = XorShift64Star(seed)
    M_A = _random_spd(rng, dim, condition)
    M_B = _random_spd(rng, dim, condition)
    c_A = rng.normal(dim)
    c_B = rng.normal(dim)
    S_A = S_B = None
    if skew:
        G = rng.normal((dim, dim))
        S_A = 0.5 * skew * (G - G.T)
    params = {"dim": dim, "condition": condition, "skew": skew}
    return affine_pair_from(M_A, c_A, M_B, c_B, S_A, S_B, seed, params)


def lasso_oracle(P, q, tau, gap_tol=1e-12, max_sweeps=1_000_000):
    """Minimise ``0.5*||Pz - q||^2 + tau*||z||_1`` without splitting.

    Returns ``(z, gap)`` or ``(None, gap)`` when coordinate descent misses
    `gap_tol`.
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    z, _, gap = kernels.lasso_cd(P, q, tau, np.zeros(P.shape[1]), max_sweeps,
                                 gap_tol)
    if gap > gap_tol:
        return None, gap
    z = _polish(P, q, tau, z)
    return z, kernels.lasso_gap(P, q, tau, z)


def _polish(P, q, tau, z):
    # Re-solve the optimality system on the detected support so that
    # |(P^T(q - Pz))_i| = tau holds to round-off on the support.
    S = np.flatnonzero(z)
    if S.size == 0:
        return z
    PS = P[:, S]
    sgn = np.sign(z[S])
    try:
        zS = np.linalg.solve(PS.T @ PS, PS.T @ q - tau * sgn)
    except np.linalg.LinAlgError:
        return z
    if np.any(np.sign(zS) != sgn):
        return z
    cand = np.zeros_like(z)
    cand[S] = zS
    g = P.T @ (q - P @ cand)
    off = np.setdiff1d(np.arange(z.size), S)
    if off.size and np.abs(g[off]).max() > tau:
        return z
    return cand


def lasso_from(P, q, tau, seed=0, params=None):
    P = np.array(P, dtype=np.float64, ndmin=2)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if not tau > 0:
        raise ValueError("tau must be positive")
    A = GradQuadratic(P, q)
    B = SubdiffL1(tau, P.shape[1])
    z, gap = lasso_oracle(P, q, tau)
    if z is None:
        return ProblemInstance(A, B, "Lasso", seed, None, params or {},
                               note=f"no oracle: coordinate descent gap {gap:.3e}")
    w = -A.apply(z)
    return ProblemInstance(A, B, "Lasso", seed, ExtendedSolution(z, w),
                           params or {})


def gen_lasso(dim, rows, seed, tau=0.1):
    if dim < 1 or rows < 1:
        raise ValueError("need dim >= 1 and rows >= 1")
    rng = XorShift64Star(seed)
    P = rng.normal((rows, dim)) / math.sqrt(rows)
    z_true = rng.normal(dim) * (rng.uniform(dim) < 0.3)
    q = P @ z_true + 0.1 * rng.normal(rows)
    return lasso_from(P, q, tau, seed, {"dim": dim, "rows": rows, "tau": tau})


def box_from(lower_A, upper_A, lower_B, upper_B, seed=0, params=None):
    """Two boxes with the centre of their intersection as oracle."""
    A = NormalCone(lower_A, upper_A)
    B = NormalCone(lower_B, upper_B)
    lo = np.maximum(A.lower, B.lower)
    hi = np.minimum(A.upper, B.upper)
    if np.any(lo >= hi):
        raise ValueError("boxes must intersect with nonempty interior")
    centre = 0.5 * (lo + hi)
    return ProblemInstance(A, B, "BoxFeasibility", seed,
                           ExtendedSolution(centre, np.zeros_like(centre)),
                           params or {})


def gen_box_feasibility(dim, seed, overlap=0.5):
    if dim < 1 or not overlap > 0:
        raise ValueError("need dim >= 1 and overlap > 0")
    rng = XorShift64Star(seed)
    lo = rng.uniform(dim, -1.0, 1.0)
    hi = lo + overlap * (1.0 + rng.uniform(dim))
    e1 = rng.uniform(dim, 0.5, 1.5)
    e2 = rng.uniform(dim, 0.5, 1.5)
    flip = rng.uniform(dim) < 0.5
    lA = np.where(flip, lo - e1, lo)
    uA = np.where(flip, hi, hi + e1)
    lB = np.where(flip, lo, lo - e2)
    uB = np.where(flip, hi + e2, hi)
    return box_from(lA, uA, lB, uB, seed, {"dim": dim, "overlap": overlap})


_GENERATORS = {
    "affine": ("AffinePair", gen_affine_pair, {"dim", "seed", "condition", "skew"}),
    "lasso": ("Lasso", gen_lasso, {"dim", "rows", "seed", "tau"}),
    "box": ("BoxFeasibility", gen_box_feasibility, {"dim", "seed", "overlap"}),
}


def generate(spec):
    """Build an instance from ``{"generator": name, **params}``."""
    name = spec.get("generator")
    if name not in _GENERATORS:
        raise ValueError(f"problem.generator must be one of "
                         f"{sorted(_GENERATORS)}, got {name!r}")
    _, fn, allowed = _GENERATORS[name]
    params = {k: v for k, v in spec.items() if k != "generator"}
    unknown = set(params) - allowed
    if unknown:
        raise ValueError(f"problem.{sorted(unknown)[0]} is not a parameter of "
                         f"generator {name!r}")
    if name == "lasso" and "rows" not in params:
        params["rows"] = 2 * params.get("dim", 1)
    try:
        return fn(**params)
    except TypeError as exc:
        raise ValueError(f"problem: {exc}") from None


def default_start(instance):
    """Deterministic start ``z0`` uniform in ``[-2, 2]^n`` and ``w0 = 0``."""
    rng = XorShift64Star(instance.seed ^ 0x5DEECE66D)
    return rng.uniform(instance.dim, -2.0, 2.0), np.zeros(instance.dim)
