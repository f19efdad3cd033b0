"""Replay checks of the convergence inequalities over recorded traces.

Everything here is computed after the fact from :class:`IterationRecord`
objects; the solver loop itself does no measurement. Distances use the
pair metric ``||(z, lam*w)||`` of :class:`~inexact_dr.space.PairPoint`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import enlargement_gap, exact_resolvent
from .space import PairPoint, pair_norm_sq

__all__ = ["FejerReport", "Failure", "DiagnosticReport", "fejer_gap_I",
           "fejer_gap_II", "fejer_gap", "check_extended_solution",
           "extended_solution_residual",
           "bound_cascade_check", "telescoped_sums", "replay",
           "FEJER_RTOL", "CASCADE_TOL"]

FEJER_RTOL = 1e-9
CASCADE_TOL = 1e-9


@dataclass(frozen=True)
class FejerReport:
    k: int
    lhs: float
    rhs: float
    slack: float

    @property
    def ok(self):
        return self.slack >= -FEJER_RTOL * (1.0 + self.lhs)


def _dist_sq(p_star, state, lam):
    """Squared pair distance from `p_star` to a record or PairPoint."""
    if isinstance(state, PairPoint):
        return pair_norm_sq(p_star - state)
    if getattr(state, "z", None) is not None:
        return pair_norm_sq(p_star - PairPoint.from_zw(state.z, state.w, lam))
    if state.dist_z < 0 or state.dist_w < 0:
        raise ValueError(f"record {state.k} carries neither iterates nor "
                         f"oracle distances")
    return state.dist_z ** 2 + (lam * state.dist_w) ** 2


def _gap_term_I(rec, sigma, nu):
    return (1.0 - rec.t) * ((nu - sigma) / sigma
                            * math.sqrt(4.0 * rec.delta * rec.rho)
                            + (1.0 - nu) * rec.aw_sq)


def _gap_term_II(rec, sigma, nu):
    return (1.0 - rec.t) * ((nu * nu - sigma * sigma) / (sigma * sigma) * rec.delta
                            + (1.0 - nu * nu) * rec.aw_sq)


def _fejer(p_star, prev, rec, lam, term):
    lhs = _dist_sq(p_star, prev, lam)
    rhs = _dist_sq(p_star, rec, lam) + term
    return FejerReport(rec.k, lhs, rhs, lhs - rhs)


def fejer_gap_I(p_star, prev, rec, sigma, nu, lam=1.0):
    """Fejer inequality of the fully inexact method at iteration ``rec.k``.

    Parameters
    ----------
    p_star : PairPoint
        ``(z*, lam*w*)`` for an extended solution.
    prev : IterationRecord or PairPoint
        The state before the iteration (a PairPoint for ``k = 1``).
    rec : IterationRecord
    sigma, nu : float
    lam : float

    Returns
    -------
    FejerReport
        ``lhs = ||p* - p_{k-1}||^2``, ``rhs = ||p* - p_k||^2`` plus the
        gap term, ``slack = lhs - rhs``.
    """
    return _fejer(p_star, prev, rec, lam, _gap_term_I(rec, sigma, nu))


def fejer_gap_II(p_star, prev, rec, sigma, nu, lam=1.0):
    """Fejer inequality of the semi-inexact method; see :func:`fejer_gap_I`."""
    return _fejer(p_star, prev, rec, lam, _gap_term_II(rec, sigma, nu))


def fejer_gap(variant, p_star, prev, rec, sigma, nu, lam=1.0):
    fn = fejer_gap_II if variant == "SemiInexact" else fejer_gap_I
    return fn(p_star, prev, rec, sigma, nu, lam)


def telescoped_sums(variant, p_star, p0, records, sigma, nu, lam=1.0):
    """Yield ``(k, lhs, rhs)`` for the summed Fejer inequality.

    ``lhs = ||p* - p_0||^2`` and ``rhs = ||p* - p_k||^2`` plus the sum of
    the gap terms of iterations ``1..k``.
    """
    term = _gap_term_II if variant == "SemiInexact" else _gap_term_I
    lhs = _dist_sq(p_star, p0, lam)
    total = 0.0
    for rec in records:
        total += term(rec, sigma, nu)
        yield rec.k, lhs, _dist_sq(p_star, rec, lam) + total


def check_extended_solution(A, B, z, w, tol):
    """Whether ``w in B(z)`` and ``-w in A(z)`` up to enlargement `tol`."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    z = np.asarray(z, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    return (enlargement_gap(B, z, w) <= tol
            and enlargement_gap(A, z, -w) <= tol)


def extended_solution_residual(A, B, z, w, lam=1.0):
    """Fixed-point residual of ``(z, w)`` for the extended solution set.

    Returns ``max(||J_B(z + lam*w) - z||, ||J_A(z - lam*w) - z||)`` with
    ``J_T`` the resolvent of ``lam*T``. It vanishes exactly on the set and,
    unlike the enlargement gaps, stays finite when `z` or `w` sits just
    outside an operator's domain.
    """
    z = np.asarray(z, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    xb, _ = exact_resolvent(B, lam, z + lam * w)
    ya, _ = exact_resolvent(A, lam, z - lam * w)
    return max(float(np.linalg.norm(xb - z)), float(np.linalg.norm(ya - z)))


def bound_cascade_check(rec, variant, sigma, nu, tol=CASCADE_TOL):
    """Check the three bounds linking ``t_k`` to ``delta_k`` and ``rho_k``.

    Fully inexact: ``0 <= t <= nu``,
    ``(nu/sigma) sqrt(4 delta rho) - nu*aw <= t*rho`` and
    ``t^2 rho <= (4 nu^2/sigma^2) delta``. Semi-inexact: ``0 <= t <= nu^2``,
    ``(nu^2/sigma^2) delta - nu^2*aw <= t*rho`` and
    ``t^2 rho <= (nu^4/sigma^2) delta``. Here ``aw`` is
    ``||lam*(a_k + w_{k-1})||^2``.
    """
    t, d, p, aw = rec.t, rec.delta, rec.rho, rec.aw_sq
    if variant == "SemiInexact":
        cap = nu * nu
        lower = cap / (sigma * sigma) * d - cap * aw
        upper = nu ** 4 / (sigma * sigma) * d
    else:
        cap = nu
        lower = nu / sigma * math.sqrt(4.0 * d * p) - nu * aw
        upper = 4.0 * nu * nu / (sigma * sigma) * d
    return (-tol <= t <= cap + tol and cap < 1.0
            and lower <= t * p + tol
            and t * t * p <= upper + tol)


@dataclass(frozen=True)
class Failure:
    k: int
    check: str
    detail: str


@dataclass
class DiagnosticReport:
    records: int = 0
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    @property
    def failing_iterations(self):
        return sorted({f.k for f in self.failures})

    def to_text(self):
        lines = [f"checked {self.records} records: "
                 f"{'PASS' if self.passed else 'FAIL'}"]
        lines += [f"warning: {w}" for w in self.warnings]
        lines += [f"k={f.k} {f.check}: {f.detail}" for f in self.failures]
        return "\n".join(lines)


def replay(records, variant, sigma, nu, lam, z0, w0, oracle=None, A=None,
           B=None, final=None, membership_tol=None):
    """Run every diagnostic over a trace.

    Parameters
    ----------
    records : sequence of IterationRecord
    variant : str
    sigma, nu, lam : float
    z0, w0 : array_like
        Starting point of the run.
    oracle : ExtendedSolution, optional
        Required for the Fejer checks.
    A, B : MonotoneOp, optional
        Required for the membership check.
    final : tuple, optional
        Final ``(z, w)``; its :func:`extended_solution_residual` must be
        at most `membership_tol`.

    Returns
    -------
    DiagnosticReport
    """
    report = DiagnosticReport(records=len(records))
    if not records:
        report.warnings.append("empty trace; nothing to check")
        return report
    for rec in records:
        if not bound_cascade_check(rec, variant, sigma, nu):
            report.failures.append(Failure(
                rec.k, "bound_cascade",
                f"t={rec.t!r} delta={rec.delta!r} rho={rec.rho!r} "
                f"aw_sq={rec.aw_sq!r}"))
    if oracle is None:
        report.warnings.append("no oracle; Fejer checks skipped")
    else:
        p_star = PairPoint.from_zw(oracle.z_star, oracle.w_star, lam)
        prev = PairPoint.from_zw(z0, w0, lam)
        for rec in records:
            fr = fejer_gap(variant, p_star, prev, rec, sigma, nu, lam)
            if not fr.ok:
                report.failures.append(Failure(
                    rec.k, "fejer", f"lhs={fr.lhs!r} rhs={fr.rhs!r} "
                                    f"slack={fr.slack!r}"))
            prev = rec
        for rec in records:
            if getattr(rec, "z", None) is None or rec.dist_z < 0:
                continue
            dz = float(np.linalg.norm(rec.z - oracle.z_star))
            dw = float(np.linalg.norm(rec.w - oracle.w_star))
            if (abs(dz - rec.dist_z) > 1e-9 * (1.0 + dz)
                    or abs(dw - rec.dist_w) > 1e-9 * (1.0 + dw)):
                report.failures.append(Failure(
                    rec.k, "consistency",
                    f"stored distances ({rec.dist_z!r}, {rec.dist_w!r}) do "
                    f"not match iterates ({dz!r}, {dw!r})"))
        p0 = PairPoint.from_zw(z0, w0, lam)
        for k, lhs, rhs in telescoped_sums(variant, p_star, p0, records,
                                           sigma, nu, lam):
            if lhs - rhs < -FEJER_RTOL * (1.0 + lhs):
                report.failures.append(Failure(
                    k, "fejer_telescoped", f"lhs={lhs!r} rhs={rhs!r}"))
    if final is not None and A is not None and membership_tol is not None:
        res = extended_solution_residual(A, B, final[0], final[1], lam)
        if not res <= membership_tol:
            report.failures.append(Failure(
                records[-1].k, "membership",
                f"final fixed-point residual {res!r} exceeds "
                f"{membership_tol!r}"))
    return report
