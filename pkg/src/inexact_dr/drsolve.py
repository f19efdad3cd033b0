"""Douglas-Rachford outer loops: exact, fully inexact and semi-inexact.

All three variants iterate on ``(z, w)``. Each iteration produces
``(y_k, a_k)`` for ``A`` with target ``z - lam*w`` and ``(x_k, b_k)`` for
``B`` with target ``y_k + lam*w``, then updates

    z_k = z_{k-1} - (1 - t_k) lam (a_k + b_k)
    w_k = w_{k-1} - (1 - t_k) (x_k - y_k) / lam

with an under-relaxation ``t_k`` that is zero for exact solves. The run
stops once ``rho_k <= stop_tol**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .certify import rho as rho_of
from .inner import (InnerExhausted, RefinementSchedule, find_acceptable_B_II,
                    find_acceptable_pair_I)
from .operators import exact_resolvent
from .space import norm, norm_sq, vec

__all__ = ["VARIANTS", "SolverConfig", "IterationRecord", "RunResult",
           "exact_dr_step", "relaxation_I", "relaxation_II", "step_update",
           "run", "VECTOR_DIM_LIMIT"]

VARIANTS = ("Exact", "FullyInexact", "SemiInexact")

# traces keep full iterate vectors only up to this dimension
VECTOR_DIM_LIMIT = 64


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 1.0
    sigma: float = 0.3
    nu: float = 0.6
    max_iter: int = 5000
    stop_tol: float = 1e-8
    variant: str = "FullyInexact"
    schedule: RefinementSchedule = field(default_factory=RefinementSchedule)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not 0.0 < self.sigma < self.nu < 1.0:
            raise ValueError(
                f"need 0 < sigma < nu < 1, got sigma={self.sigma}, nu={self.nu}")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be positive")
        if not self.stop_tol > 0:
            raise ValueError("stop_tol must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; "
                             f"expected one of {VARIANTS}")

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return {"lambda": self.lam, "sigma": self.sigma, "nu": self.nu,
                "max_iter": self.max_iter, "stop_tol": self.stop_tol,
                "variant": self.variant, "schedule": self.schedule.to_dict()}


@dataclass
class IterationRecord:
    k: int
    delta: float
    rho: float
    t: float
    r_norm: float
    s_norm: float
    eps: float
    mu: float
    aw_sq: float
    xz_norm: float
    bw_norm: float
    inner_index: int
    dist_z: float = -1.0
    dist_w: float = -1.0
    z: np.ndarray | None = None
    w: np.ndarray | None = None
    y: np.ndarray | None = None
    a: np.ndarray | None = None
    x: np.ndarray | None = None
    b: np.ndarray | None = None


@dataclass
class RunResult:
    records: list
    status: str
    config: SolverConfig
    z0: np.ndarray
    w0: np.ndarray
    z: np.ndarray
    w: np.ndarray
    y: np.ndarray | None = None
    a: np.ndarray | None = None
    x: np.ndarray | None = None
    b: np.ndarray | None = None
    message: str = ""

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def iterations(self):
        return len(self.records)


def exact_dr_step(A, B, lam, x_prev, b_prev):
    """One step of the classical recursion; returns ``(y, a, x, b)``."""
    x_prev = np.asarray(x_prev, dtype=np.float64)
    b_prev = np.asarray(b_prev, dtype=np.float64)
    y, a = exact_resolvent(A, lam, x_prev - lam * b_prev)
    x, b = exact_resolvent(B, lam, y + lam * b_prev)
    return y, a, x, b


def relaxation_I(delta, rho, aw_sq, sigma, nu):
    """Under-relaxation of the fully inexact method, in ``[0, nu]``."""
    if rho == 0.0:
        return 0.0
    t = nu * max(0.0, math.sqrt(4.0 * delta / (sigma * sigma * rho)) - aw_sq / rho)
    return min(t, nu)


def relaxation_II(delta, rho, aw_sq, sigma, nu):
    """Under-relaxation of the semi-inexact method, in ``[0, nu^2]``."""
    if rho == 0.0:
        return 0.0
    t = nu * nu * max(0.0, delta / (sigma * sigma * rho) - aw_sq / rho)
    return min(t, nu * nu)


def step_update(z_prev, w_prev, a, b, x, y, t, lam):
    if not 0.0 <= t < 1.0:
        raise ValueError(f"relaxation must lie in [0, 1), got {t}")
    s = 1.0 - t
    z = np.asarray(z_prev) - s * lam * (np.asarray(a) + np.asarray(b))
    w = np.asarray(w_prev) - (s / lam) * (np.asarray(x) - np.asarray(y))
    return z, w


# relative size of a resolvent defect treated as floating-point round-off
ROUNDOFF_RTOL = 1e-14


def _at_fixed_point(B, lam, z, w, y, a):
    """Whether ``(z, w)`` is an extended solution up to round-off.

    `y`, `a` are the exact resolvent output for ``A`` at ``z - lam*w``.
    """
    zs, ws = ROUNDOFF_RTOL * (1.0 + norm(z)), ROUNDOFF_RTOL * (1.0 + lam * norm(w))
    if norm(y - z) > zs or lam * norm(a + w) > ws:
        return False
    x, b = exact_resolvent(B, lam, z + lam * w)
    return norm(x - z) <= zs and lam * norm(b - w) <= ws


def run(A, B, z0, w0, config, reference=None, keep_vectors=None):
    """Run the configured variant from ``(z0, w0)``.

    Parameters
    ----------
    A, B : MonotoneOp
    z0, w0 : array_like
    config : SolverConfig
    reference : ExtendedSolution, optional
        If given, records carry ``dist_z = ||z_k - z*||`` and
        ``dist_w = ||w_k - w*||``; otherwise both are ``-1``.
    keep_vectors : bool, optional
        Store iterate vectors in each record. Defaults to
        ``dim <= VECTOR_DIM_LIMIT``.

    Returns
    -------
    RunResult
        ``status`` is ``"converged"``, ``"max_iter"`` or
        ``"inner_exhausted"``; the trace is kept in every case.
    """
    z = vec(z0, dim=A.dim).copy()
    w = vec(w0, dim=A.dim).copy()
    if B.dim != A.dim:
        raise ValueError("operators act on spaces of different dimension")
    if keep_vectors is None:
        keep_vectors = A.dim <= VECTOR_DIM_LIMIT
    lam, sigma, nu = config.lam, config.sigma, config.nu
    stop = config.stop_tol ** 2
    result = RunResult([], "max_iter", config, z.copy(), w.copy(), z, w)
    # inner streams warm-start at the previous iteration's points
    y_prev = x_prev = None

    for k in range(1, config.max_iter + 1):
        eps = mu = r_norm = s_norm = 0.0
        delta = 0.0
        if config.variant == "Exact":
            y, a, x, b = exact_dr_step(A, B, lam, z, w)
            index = 1
        elif config.variant == "FullyInexact":
            try:
                certA, certB, led = find_acceptable_pair_I(
                    A, B, lam, sigma, z, w, config.schedule,
                    start_A=y_prev, start_B=x_prev)
            except InnerExhausted as exc:
                result.status = "inner_exhausted"
                result.message = f"iteration {k}: {exc}"
                break
            y, a, eps = certA.point, certA.value, certA.eps
            x, b, mu = certB.point, certB.value, certB.eps
            delta, r_norm, s_norm, index = led.delta, led.r_norm, led.s_norm, led.index
        else:
            y, a = exact_resolvent(A, lam, z - lam * w)
            if _at_fixed_point(B, lam, z, w, y, a):
                # round-off separates y from z, which no certificate for B
                # could beat; record the exact fixed point instead
                y, a, x, b = z.copy(), -w, z.copy(), w.copy()
                index = 0
            else:
                try:
                    certB, led = find_acceptable_B_II(
                        B, lam, sigma, y, a, w, config.schedule, start=x_prev)
                except InnerExhausted as exc:
                    result.status = "inner_exhausted"
                    result.message = f"iteration {k}: {exc}"
                    break
                x, b, mu = certB.point, certB.value, certB.eps
                delta, s_norm, index = led.delta, led.s_norm, led.index

        rho = rho_of(a, b, x, y, lam)
        aw_sq = norm_sq(lam * (a + w))
        if rho == 0.0 and delta > 0.0:
            raise AssertionError(
                f"iteration {k}: positive error {delta} with zero progress")
        if config.variant == "Exact":
            t = 0.0
            z_new, w_new = np.array(x), np.array(b)
        else:
            relax = relaxation_I if config.variant == "FullyInexact" else relaxation_II
            t = relax(delta, rho, aw_sq, sigma, nu)
            z_new, w_new = step_update(z, w, a, b, x, y, t, lam)

        rec = IterationRecord(
            k=k, delta=delta, rho=rho, t=t, r_norm=r_norm, s_norm=s_norm,
            eps=eps, mu=mu, aw_sq=aw_sq, xz_norm=norm(x - z_new),
            bw_norm=norm(b - w_new), inner_index=index)
        if reference is not None:
            rec.dist_z = norm(z_new - reference.z_star)
            rec.dist_w = norm(w_new - reference.w_star)
        if keep_vectors:
            rec.z, rec.w = z_new, w_new
            rec.y, rec.a, rec.x, rec.b = (np.array(y), np.array(a),
                                          np.array(x), np.array(b))
        result.records.append(rec)
        z, w = z_new, w_new
        y_prev, x_prev = y, x
        result.z, result.w = z, w
        result.y, result.a, result.x, result.b = y, a, x, b
        if rho <= stop:
            result.status = "converged"
            break
    return result
