"""Inexact proximal certificates and the error arithmetic built on them.

A :class:`Certificate` records one approximate solution of the proximal
inclusion-equation system ``v in T(z)``, ``lam*v + z = zeta``: the point,
the value, an enlargement parameter ``eps`` with ``v in T^[eps](point)``,
the step ``lam`` and the prox target ``zeta``. Its residual is
``lam*value + point - zeta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .operators import enlargement_gap, exact_resolvent
from .space import norm_sq, vec

__all__ = ["Certificate", "ErrorLedger", "residual", "rho", "delta_I",
           "delta_II", "criterion_I", "criterion_II", "error_bound_terms",
           "error_bound_holds",
           "INEQ_TOL"]

# absolute slack on every inequality check
INEQ_TOL = 1e-9


@dataclass(frozen=True)
class Certificate:
    point: np.ndarray
    value: np.ndarray
    eps: float
    lam: float
    zeta: np.ndarray

    def __post_init__(self):
        p = vec(self.point)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "value", vec(self.value, dim=p.size))
        object.__setattr__(self, "zeta", vec(self.zeta, dim=p.size))
        eps = float(self.eps)
        if not eps >= 0.0:
            raise ValueError(f"eps must be nonnegative, got {eps}")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def trusted(cls, point, value, eps, lam, zeta):
        """Build without validation; for arrays produced inside the package."""
        self = object.__new__(cls)
        d = self.__dict__
        d["point"], d["value"], d["eps"] = point, value, eps
        d["lam"], d["zeta"] = lam, zeta
        return self

    @cached_property
    def residual(self):
        return self.lam * self.value + self.point - self.zeta

    @cached_property
    def residual_norm_sq(self):
        r = self.residual
        return float(r @ r)

    def is_valid_for(self, op, tol=INEQ_TOL):
        """Whether ``value in op^[eps](point)`` per the computable gap."""
        return enlargement_gap(op, self.point, self.value) <= self.eps + tol


@dataclass(frozen=True)
class ErrorLedger:
    delta: float
    rho: float
    r_norm: float
    s_norm: float
    aw_sq: float = 0.0
    index: int = 0


def residual(cert):
    """``lam*value + point - zeta``."""
    return cert.residual


def rho(a, b, x, y, lam):
    """``||lam*(a + b)||^2 + ||x - y||^2``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    a, b, x, y = (np.asarray(t, dtype=np.float64) for t in (a, b, x, y))
    if not (a.shape == b.shape == x.shape == y.shape):
        raise ValueError("dimension mismatch")
    return norm_sq(lam * (a + b)) + norm_sq(x - y)


def delta_I(certA, certB):
    if certA.lam != certB.lam:
        raise ValueError(
            f"certificates use different step sizes: {certA.lam} vs {certB.lam}")
    return (certA.residual_norm_sq + certB.residual_norm_sq
            + 2.0 * certA.lam * (certA.eps + certB.eps))


def delta_II(certB):
    return certB.residual_norm_sq + 2.0 * certB.lam * certB.eps


def _check_sigma(sigma):
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")


def criterion_I(delta, rho, sigma):
    """Relative error test of the fully inexact method: ``delta <= sigma^2/4 rho``."""
    _check_sigma(sigma)
    return delta <= 0.25 * sigma * sigma * rho


def criterion_II(delta, rho, sigma):
    """Relative error test of the semi-inexact method: ``delta <= sigma^2 rho``."""
    _check_sigma(sigma)
    return delta <= sigma * sigma * rho


def error_bound_terms(op, lam, zeta, cert):
    """Return ``(lhs, rhs)`` of the resolvent error bound for `cert`.

    ``lhs = ||lam*(v* - v)||^2 + ||z* - z||^2`` against the exact resolvent
    ``(z*, v*)`` and ``rhs = ||r||^2 + 2*lam*eps``.
    """
    z_star, v_star = exact_resolvent(op, lam, zeta)
    lhs = norm_sq(lam * (v_star - cert.value)) + norm_sq(z_star - cert.point)
    rhs = norm_sq(cert.lam * cert.value + cert.point - np.asarray(zeta)) \
        + 2.0 * lam * cert.eps
    return lhs, rhs


def error_bound_holds(op, lam, zeta, cert, tol=INEQ_TOL):
    lhs, rhs = error_bound_terms(op, lam, zeta, cert)
    return lhs <= rhs + tol
