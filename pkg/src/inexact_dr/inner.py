"""Inexact proximal engines.

A :class:`CertificateStream` produces certificates ``c_1, c_2, ...`` for one
proximal subproblem whose residual and enlargement vanish as ``j`` grows,
with the envelopes ``||r_j|| <= 1/j`` and ``eps_j <= 1/(2*lam*j^2)``.
The acceptance searches run such streams until the relative error criterion
of the outer method holds.

Modes
-----
Exact
    Every certificate is the exact resolvent.
ResidualOnly
    Exact graph points of the resolvent at a damped target
    ``zeta + c/m`` with ``c`` chosen so that ``m = 1`` reproduces the start
    point; ``eps = 0`` and ``r = c/m``.
Transported
    The ResidualOnly point, with the value pulled toward the exact
    resolvent value (``v = v*/m + (1 - 1/m) v_m``); ``eps`` from the gap
    oracle.
Iterative
    Gradient iteration on the strongly monotone affine prox equation, for
    smooth operators. Non-smooth operators are solved exactly.

The internal damping index ``m`` starts at ``j`` and is multiplied by the
schedule's ``damping_base`` until the envelopes hold, so they are satisfied by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certify import (Certificate, ErrorLedger, criterion_I, criterion_II,
                      delta_I, delta_II, rho)
from .operators import enlargement_gap, exact_resolvent
from .space import norm, norm_sq

__all__ = ["MODES", "RefinementSchedule", "InnerExhausted",
           "CertificateStream", "certificate_stream", "find_acceptable_pair_I",
           "find_acceptable_B_II", "EXACT_GAP_TOL"]

MODES = ("Exact", "ResidualOnly", "Transported", "Iterative")

# gap threshold for "exact membership" short circuits; affine gaps are
# quadratic in the membership error, so this must sit at round-off level
EXACT_GAP_TOL = 1e-30

_ENVELOPE_SLACK = 1e-12
_MAX_GD_STEPS = 1_000_000
_MAX_BLOCK = 4096


@dataclass(frozen=True)
class RefinementSchedule:
    mode: str = "ResidualOnly"
    j_max: int = 1_000_000
    damping_base: float = 2.0

    def __post_init__(self):
        if not self.damping_base > 1.0:
            raise ValueError("damping_base must exceed 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown refinement mode {self.mode!r}; "
                             f"expected one of {MODES}")
        if int(self.j_max) < 1:
            raise ValueError("j_max must be at least 1")
        object.__setattr__(self, "j_max", int(self.j_max))

    def to_dict(self):
        return {"mode": self.mode, "j_max": self.j_max,
                "damping_base": self.damping_base}


class InnerExhausted(RuntimeError):
    """No acceptable certificate within ``j_max`` refinements."""

    def __init__(self, message, ledger=None, index=None):
        super().__init__(message)
        self.ledger = ledger
        self.index = index


def _gd_constants(op):
    cache = op.__dict__.setdefault("_gdcache", {})
    if not cache:
        K = op.linear_part()
        sym = 0.5 * (K + K.T)
        cache["mu"] = float(np.linalg.eigvalsh(sym).min())
        cache["L"] = float(np.linalg.norm(K, 2))
    return cache["mu"], cache["L"]


class CertificateStream:
    """Stateful generator of certificates for ``v in T(z)``, ``lam*v + z = zeta``.

    `start` (default `zeta`) is the initial inner iterate; it is projected
    onto the operator's domain. :meth:`next` accepts a new target, which is
    how the fully inexact search re-aims the second subproblem.
    """

    def __init__(self, op, lam, zeta, schedule, start=None):
        if not lam > 0:
            raise ValueError("lambda must be positive")
        self.op = op
        self.lam = float(lam)
        self.schedule = schedule
        self.j = 0
        zeta = np.asarray(zeta, dtype=np.float64)
        op._check(zeta)
        s = zeta if start is None else np.asarray(start, dtype=np.float64)
        self._start = op.project_domain(s)
        self._iterative = schedule.mode == "Iterative" and op.smooth
        if self._iterative:
            mu, L = _gd_constants(op)
            self._step = (1.0 + self.lam * mu) / (1.0 + self.lam * L) ** 2
            self._x = np.array(self._start)
        self.zeta = zeta
        self._exact = None

    @property
    def batchable(self):
        """Whether certificate ``j`` depends only on ``j`` and the target."""
        return self.schedule.mode in ("ResidualOnly", "Transported")

    @property
    def exact(self):
        if self._exact is None:
            self._exact = exact_resolvent(self.op, self.lam, self.zeta)
        return self._exact

    def __iter__(self):
        return self

    def __next__(self):
        return self.next()

    def next(self, zeta=None):
        if zeta is not None:
            self.zeta = np.array(zeta, dtype=np.float64)
            self._exact = None
        self.j += 1
        if self.j > self.schedule.j_max:
            raise InnerExhausted(
                f"certificate stream exceeded j_max={self.schedule.j_max}",
                index=self.j - 1)
        if self._iterative:
            return self._gradient_certificate()
        if not self.batchable:
            z, v = self.exact
            return Certificate.trusted(z, v, 0.0, self.lam, self.zeta)
        X, V, eps, _ = self.damped_rows(np.array([self.j]), self.zeta[None])
        return Certificate.trusted(X[0], V[0], float(eps[0]), self.lam,
                                   self.zeta)

    def damped_rows(self, js, Z):
        """Damped certificates for indices `js` at the targets ``Z[i]``.

        Returns ``(X, V, eps, R)`` with one certificate per row and residual
        rows ``R = lam*V + X - Z``. The damping index of each row starts at
        ``j`` and grows by ``damping_base`` until both envelopes hold.
        """
        op, lam, s = self.op, self.lam, self._start
        transported = self.schedule.mode == "Transported"
        # offset reproducing the start point at m = 1
        C = s + lam * op.selection_rows(s, (Z - s) / lam) - Z
        if transported:
            _, V_star = op.resolvent_rows(lam, Z)
        jf = np.asarray(js, dtype=np.float64)
        m = jf.copy()
        X = np.empty_like(Z)
        V = np.empty_like(Z)
        eps = np.zeros(len(Z))
        R = np.empty_like(Z)
        todo = np.arange(len(Z))
        while todo.size:
            Zt, mt = Z[todo], m[todo]
            Xt, Vt = op.resolvent_rows(lam, Zt + C[todo] / mt[:, None])
            et = np.zeros(todo.size)
            if transported:
                theta = (1.0 / mt)[:, None]
                Vt = theta * V_star[todo] + (1.0 - theta) * Vt
                et = op.gap_rows(Xt, Vt)
                if np.isinf(et).any():
                    raise RuntimeError(
                        "transported value left the enlargement domain")
            Rt = lam * Vt + Xt - Zt
            rn = np.sqrt(np.einsum("ij,ij->i", Rt, Rt))
            jt = jf[todo]
            ok = ((rn * jt <= 1.0 + _ENVELOPE_SLACK)
                  & (2.0 * lam * et * jt * jt <= 1.0 + _ENVELOPE_SLACK))
            done = todo[ok]
            X[done], V[done], eps[done], R[done] = Xt[ok], Vt[ok], et[ok], Rt[ok]
            todo = todo[~ok]
            m[todo] *= self.schedule.damping_base
        return X, V, eps, R

    def _gradient_certificate(self):
        op, lam, j = self.op, self.lam, self.j
        x = self._x
        if j > 1:
            x = x - self._step * (lam * op.apply(x) + x - self.zeta)
        steps = 0
        while True:
            v = op.apply(x)
            r = lam * v + x - self.zeta
            if math.sqrt(float(r @ r)) <= (1.0 + _ENVELOPE_SLACK) / j:
                break
            x = x - self._step * r
            steps += 1
            if steps > _MAX_GD_STEPS:
                raise InnerExhausted("gradient inner solver did not converge",
                                     index=j)
        self._x = x
        return Certificate.trusted(x, v, 0.0, lam, self.zeta)


def certificate_stream(op, lam, zeta, schedule, start=None):
    """Iterate certificates ``j = 1 .. j_max`` for a fixed prox target."""
    stream = CertificateStream(op, lam, zeta, schedule, start=start)
    for _ in range(schedule.j_max):
        yield stream.next()


def _rho(a, b, x, y, lam):
    u = lam * (a + b)
    d = x - y
    return float(u @ u) + float(d @ d)


def _ledger(delta, rho_, certA, certB, aw_sq, index):
    r = math.sqrt(certA.residual_norm_sq) if certA is not None else 0.0
    return ErrorLedger(delta=delta, rho=rho_, r_norm=r,
                       s_norm=math.sqrt(certB.residual_norm_sq), aw_sq=aw_sq,
                       index=index)


def _blocks(j_max):
    # geometric blocks of consecutive indices; the first acceptable index
    # is still the one returned
    j0, size = 1, 1
    while j0 <= j_max:
        stop = min(j0 + size, j_max + 1)
        yield np.arange(j0, stop)
        j0, size = stop, min(2 * size, _MAX_BLOCK)


def _rowsq(U):
    return np.einsum("ij,ij->i", U, U)


def find_acceptable_pair_I(A, B, lam, sigma, z_prev, w_prev, schedule,
                          start_A=None, start_B=None):
    """Search for a fully inexact certificate pair at ``(z_prev, w_prev)``.

    The streams start at `start_A` and `start_B` (default `z_prev`) and
    advance in lockstep; the B target ``y_j + lam*w_prev`` follows the
    current A point. Warm starts at the previous iteration's points keep
    the acceptance index bounded when an operator is non-smooth. Returns
    ``(certA, certB, ledger)`` for the first ``j`` meeting the criterion;
    ``ledger.index == 0`` marks the exact-membership short circuit.
    """
    criterion_I(0.0, 0.0, sigma)
    z_prev = np.asarray(z_prev, dtype=np.float64)
    w_prev = np.asarray(w_prev, dtype=np.float64)
    lw = lam * w_prev
    if (enlargement_gap(A, z_prev, -w_prev) <= EXACT_GAP_TOL
            and enlargement_gap(B, z_prev, w_prev) <= EXACT_GAP_TOL):
        certA = Certificate(z_prev, -w_prev, 0.0, lam, z_prev - lw)
        certB = Certificate(z_prev, w_prev, 0.0, lam, z_prev + lw)
        return certA, certB, _ledger(0.0, 0.0, certA, certB, 0.0, 0)
    bound = 0.25 * sigma * sigma
    streamA = CertificateStream(A, lam, z_prev - lw, schedule,
                                start=z_prev if start_A is None else start_A)
    streamB = CertificateStream(B, lam, z_prev + lw, schedule,
                                start=z_prev if start_B is None else start_B)

    def accept(certA, certB, j):
        d = delta_I(certA, certB)
        p = _rho(certA.value, certB.value, certB.point, certA.point, lam)
        if d <= bound * p:
            aw = norm_sq(lam * (certA.value + w_prev))
            return _ledger(d, p, certA, certB, aw, j)
        return None

    ledger = None
    if streamA.batchable and streamB.batchable:
        ZA = streamA.zeta[None]
        for js in _blocks(schedule.j_max):
            XA, VA, eA, RA = streamA.damped_rows(js, np.repeat(ZA, js.size, 0))
            ZB = XA + lw
            XB, VB, eB, RB = streamB.damped_rows(js, ZB)
            d = _rowsq(RA) + _rowsq(RB) + 2.0 * lam * (eA + eB)
            p = _rowsq(lam * (VA + VB)) + _rowsq(XB - XA)
            for i in np.flatnonzero(d <= bound * p * (1.0 + 1e-12)):
                certA = Certificate.trusted(XA[i], VA[i], float(eA[i]), lam,
                                            streamA.zeta)
                certB = Certificate.trusted(XB[i], VB[i], float(eB[i]), lam,
                                            ZB[i])
                led = accept(certA, certB, int(js[i]))
                if led is not None:
                    return certA, certB, led
            ledger = ErrorLedger(float(d[-1]), float(p[-1]),
                                 math.sqrt(_rowsq(RA[-1:])[0]),
                                 math.sqrt(_rowsq(RB[-1:])[0]), index=int(js[-1]))
    else:
        for j in range(1, schedule.j_max + 1):
            certA = streamA.next()
            certB = streamB.next(zeta=certA.point + lw)
            led = accept(certA, certB, j)
            if led is not None:
                return certA, certB, led
            d = delta_I(certA, certB)
            p = _rho(certA.value, certB.value, certB.point, certA.point, lam)
            ledger = _ledger(d, p, certA, certB, 0.0, j)
    raise InnerExhausted(
        f"no acceptable certificate pair within j_max={schedule.j_max}",
        ledger=ledger, index=schedule.j_max)


def find_acceptable_B_II(B, lam, sigma, y_k, a_k, w_prev, schedule,
                         start=None):
    """Search for the semi-inexact B certificate given an exact ``(y_k, a_k)``.

    The stream starts at `start` (default `y_k`). Returns
    ``(certB, ledger)``; the ledger's ``r_norm`` is zero.
    """
    criterion_II(0.0, 0.0, sigma)
    y_k = np.asarray(y_k, dtype=np.float64)
    a_k = np.asarray(a_k, dtype=np.float64)
    w_prev = np.asarray(w_prev, dtype=np.float64)
    zeta = y_k + lam * w_prev
    aw = norm_sq(lam * (a_k + w_prev))
    if enlargement_gap(B, y_k, w_prev) <= EXACT_GAP_TOL:
        certB = Certificate(y_k, w_prev, 0.0, lam, zeta)
        p = _rho(a_k, w_prev, y_k, y_k, lam)
        return certB, _ledger(0.0, p, None, certB, aw, 0)
    bound = sigma * sigma
    stream = CertificateStream(B, lam, zeta, schedule,
                               start=y_k if start is None else start)

    def accept(certB, j):
        d = delta_II(certB)
        p = _rho(a_k, certB.value, certB.point, y_k, lam)
        return _ledger(d, p, None, certB, aw, j) if d <= bound * p else None

    ledger = None
    if stream.batchable:
        for js in _blocks(schedule.j_max):
            X, V, e, R = stream.damped_rows(js, np.repeat(zeta[None], js.size, 0))
            d = _rowsq(R) + 2.0 * lam * e
            p = _rowsq(lam * (a_k + V)) + _rowsq(X - y_k)
            for i in np.flatnonzero(d <= bound * p * (1.0 + 1e-12)):
                certB = Certificate.trusted(X[i], V[i], float(e[i]), lam, zeta)
                led = accept(certB, int(js[i]))
                if led is not None:
                    return certB, led
            ledger = ErrorLedger(float(d[-1]), float(p[-1]), 0.0,
                                 math.sqrt(_rowsq(R[-1:])[0]), index=int(js[-1]))
    else:
        for j in range(1, schedule.j_max + 1):
            certB = stream.next()
            led = accept(certB, j)
            if led is not None:
                return certB, led
            ledger = _ledger(delta_II(certB), 0.0, None, certB, 0.0, j)
    raise InnerExhausted(
        f"no acceptable B certificate within j_max={schedule.j_max}",
        ledger=ledger, index=schedule.j_max)
