"""Maximal monotone operators with exact resolvents and enlargement gaps.

Every operator ``T`` in the catalog provides

* ``resolvent(lam, zeta) -> (z, v)`` with ``v in T(z)`` and
  ``lam*v + z = zeta``;
* ``gap(x, v)``: a computable ``G >= 0`` such that ``v`` lies in the
  ``G``-enlargement of ``T`` at ``x`` (``inf`` when no finite ``G`` exists);
* ``selection(x, target)``: the element of ``T(x)`` closest to `target`,
  for ``x`` in the domain (see ``project_domain``);
* ``scaled(lam)``: the operator ``lam*T``.

The ``*_rows`` variants take 2-D arrays holding one point per row and are
what the batched certificate searches call.

For affine operators with a positive semidefinite symmetric part the gap is
the exact Fitzpatrick gap ``sup_y <x - y, T(y) - v>``; for subdifferentials
it is the Fenchel gap ``g(x) + g*(v) - <x, v>``, which over-estimates the
Fitzpatrick gap and is therefore a valid enlargement parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .space import vec

__all__ = [
    "MonotoneOp", "AffinePD", "GradQuadratic", "SubdiffL1", "NormalCone",
    "Shifted", "identity", "ExtendedSolution", "exact_resolvent",
    "enlargement_gap", "scaled_gap_identity_check", "op_from_dict",
]

# Slack for |v_i| <= tau and l <= x <= u when deciding conjugate domains;
# absorbs round-off in values produced by the resolvents themselves.
DOMAIN_TOL = 1e-12

_SYM_TOL = 1e-12


class MonotoneOp:
    """Base class; concrete kinds override the hooks below."""

    kind = "abstract"
    smooth = False

    @property
    def dim(self):
        raise NotImplementedError

    def resolvent(self, lam, zeta):
        raise NotImplementedError

    def gap(self, x, v):
        raise NotImplementedError

    def selection(self, x, target):
        raise NotImplementedError

    def project_domain(self, x):
        return np.asarray(x, dtype=np.float64)

    def resolvent_rows(self, lam, Z):
        pairs = [self.resolvent(lam, z) for z in Z]
        return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])

    def gap_rows(self, X, V):
        return np.array([self.gap(x, v) for x, v in zip(X, V)])

    def selection_rows(self, x, T):
        return np.array([self.selection(x, t) for t in T])

    def scaled(self, lam):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    def _check(self, *vs):
        for v in vs:
            if np.shape(v) != (self.dim,):
                raise ValueError(
                    f"dimension mismatch: operator has dim {self.dim}, "
                    f"got shape {np.shape(v)}")


def _as_matrix(a, n=None, name="matrix"):
    m = np.array(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if n is not None and m.shape[0] != n:
        raise ValueError(f"{name} must be {n}x{n}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    m.setflags(write=False)
    return m


class _LinearResolventMixin:
    """Caches ``(I + lam*K)^{-1}`` per step size for a fixed matrix ``K``."""

    def _resolvent_matrix(self, lam):
        cache = self.__dict__.setdefault("_rcache", {})
        R = cache.get(lam)
        if R is None:
            K = np.eye(self.dim) + lam * self.linear_part()
            try:
                R = np.linalg.solve(K, np.eye(self.dim))
            except np.linalg.LinAlgError as exc:
                raise ValueError("resolvent system is singular") from exc
            R.setflags(write=False)
            if len(cache) > 8:
                cache.clear()
            cache[lam] = R
        return R


class AffinePD(_LinearResolventMixin, MonotoneOp):
    """``T(x) = (M + S) x + c`` with ``M`` symmetric PSD and ``S`` skew."""

    kind = "affine"
    smooth = True

    def __init__(self, M, S=None, c=None):
        M = _as_matrix(M, name="M")
        n = M.shape[0]
        scale = max(1.0, float(np.abs(M).max()))
        if np.abs(M - M.T).max() > _SYM_TOL * scale:
            raise ValueError("M must be symmetric")
        evals, evecs = np.linalg.eigh(M)
        if evals.min() < -_SYM_TOL * scale:
            raise ValueError("M must be positive semidefinite")
        if S is None:
            S = np.zeros((n, n))
        S = _as_matrix(S, n, name="S")
        if np.abs(S + S.T).max() > _SYM_TOL * max(1.0, float(np.abs(S).max())):
            raise ValueError("S must be skew-symmetric")
        self.M = M
        self.S = S
        self.c = vec(np.zeros(n) if c is None else c, dim=n)
        self._K = M + S
        self._K.setflags(write=False)
        self._evals = evals
        self._evecs = evecs
        self._rank_tol = _SYM_TOL * max(scale, float(evals.max()))

    @property
    def dim(self):
        return self.M.shape[0]

    def linear_part(self):
        return self._K

    def apply(self, x):
        return self._K @ x + self.c

    def resolvent(self, lam, zeta):
        R = self._resolvent_matrix(lam)
        z = R @ (zeta - lam * self.c)
        return z, (zeta - z) / lam

    def resolvent_rows(self, lam, Z):
        X = (Z - lam * self.c) @ self._resolvent_matrix(lam).T
        return X, (Z - X) / lam

    def gap(self, x, v):
        self._check(x, v)
        return float(self.gap_rows(np.asarray(x)[None], np.asarray(v)[None])[0])

    def gap_rows(self, X, V):
        D = (V - X @ self._K.T - self.c) @ self._evecs
        pos = self._evals > self._rank_tol
        out = 0.25 * np.sum(D[:, pos] ** 2 / self._evals[pos], axis=1)
        if not pos.all():
            bad = (np.abs(D[:, ~pos]).max(axis=1)
                   > 1e-10 * (1.0 + np.abs(D).max(axis=1)))
            out[bad] = math.inf
        return out

    def selection(self, x, target):
        return self.apply(x)

    def selection_rows(self, x, T):
        return np.broadcast_to(self.apply(x), np.shape(T))

    def scaled(self, lam):
        return AffinePD(lam * self.M, lam * self.S, lam * self.c)

    def to_dict(self):
        return {"kind": self.kind, "M": self.M.tolist(), "S": self.S.tolist(),
                "c": self.c.tolist()}


def identity(dim=1):
    return AffinePD(np.eye(dim))


class GradQuadratic(_LinearResolventMixin, MonotoneOp):
    """Gradient of ``g(x) = 0.5*||Px - q||^2``."""

    kind = "grad_quadratic"
    smooth = True

    def __init__(self, P, q):
        P = np.array(P, dtype=np.float64)
        if P.ndim != 2:
            raise ValueError("P must be a matrix")
        P.setflags(write=False)
        self.P = P
        self.q = vec(q, dim=P.shape[0])
        U, s, Vt = np.linalg.svd(P, full_matrices=False)
        keep = s > 1e-12 * max(1.0, float(s.max(initial=0.0)))
        self._U = U[:, keep]
        self._s = s[keep]
        self._Vt = Vt[keep]
        self._Utq = self._U.T @ self.q
        self._K = P.T @ P
        self._K.setflags(write=False)

    @property
    def dim(self):
        return self.P.shape[1]

    def linear_part(self):
        return self._K

    def value(self, x):
        r = self.P @ x - self.q
        return 0.5 * float(r @ r)

    def apply(self, x):
        return self.P.T @ (self.P @ x - self.q)

    def resolvent(self, lam, zeta):
        R = self._resolvent_matrix(lam)
        z = R @ (zeta + lam * (self.P.T @ self.q))
        return z, (zeta - z) / lam

    def resolvent_rows(self, lam, Z):
        X = (Z + lam * (self.P.T @ self.q)) @ self._resolvent_matrix(lam).T
        return X, (Z - X) / lam

    def gap(self, x, v):
        self._check(x, v)
        return float(self.gap_rows(np.asarray(x)[None], np.asarray(v)[None])[0])

    def gap_rows(self, X, V):
        # Fenchel gap in the right singular basis; v outside range(P^T)
        # has an infinite conjugate
        VV = V @ self._Vt.T
        off = np.abs(V - VV @ self._Vt).max(axis=1)
        E = (X @ self._Vt.T) * self._s - self._Utq - VV / self._s
        out = 0.5 * np.sum(E * E, axis=1)
        out[off > 1e-10 * (1.0 + np.abs(V).max(axis=1))] = math.inf
        return out

    def selection(self, x, target):
        return self.apply(x)

    def selection_rows(self, x, T):
        return np.broadcast_to(self.apply(x), np.shape(T))

    def scaled(self, lam):
        r = math.sqrt(lam)
        return GradQuadratic(r * self.P, r * self.q)

    def to_dict(self):
        return {"kind": self.kind, "P": self.P.tolist(), "q": self.q.tolist()}


class SubdiffL1(MonotoneOp):
    """Subdifferential of ``tau*||x||_1``."""

    kind = "l1"

    def __init__(self, tau, dim):
        tau = float(tau)
        if not tau > 0.0 or not math.isfinite(tau):
            raise ValueError("tau must be positive")
        if int(dim) < 1:
            raise ValueError("dim must be positive")
        self.tau = tau
        self._dim = int(dim)

    @property
    def dim(self):
        return self._dim

    def value(self, x):
        return self.tau * float(np.abs(x).sum())

    def resolvent(self, lam, zeta):
        zeta = np.asarray(zeta, dtype=np.float64)
        z = kernels.soft_threshold(zeta, lam * self.tau)
        v = np.clip(zeta / lam, -self.tau, self.tau)
        return z, v

    def resolvent_rows(self, lam, Z):
        thr = lam * self.tau
        X = np.sign(Z) * np.maximum(np.abs(Z) - thr, 0.0)
        return X, np.clip(Z / lam, -self.tau, self.tau)

    def gap(self, x, v):
        self._check(x, v)
        return kernels.l1_gap(x, v, self.tau, DOMAIN_TOL)

    def gap_rows(self, X, V):
        out = np.maximum(np.sum(self.tau * np.abs(X) - X * V, axis=1), 0.0)
        out[np.any(np.abs(V) > self.tau * (1.0 + DOMAIN_TOL), axis=1)] = math.inf
        return out

    def selection(self, x, target):
        return kernels.l1_selection(x, target, self.tau)

    def selection_rows(self, x, T):
        out = np.clip(T, -self.tau, self.tau)
        out[:, x > 0.0] = self.tau
        out[:, x < 0.0] = -self.tau
        return out

    def scaled(self, lam):
        return SubdiffL1(lam * self.tau, self._dim)

    def to_dict(self):
        return {"kind": self.kind, "tau": self.tau, "dim": self._dim}


class NormalCone(MonotoneOp):
    """Normal cone of the box ``[lower, upper]``."""

    kind = "box"

    def __init__(self, lower, upper):
        lo = vec(lower)
        hi = vec(upper, dim=lo.size)
        if np.any(lo > hi):
            raise ValueError("box bounds must satisfy lower <= upper")
        self.lower = lo
        self.upper = hi

    @property
    def dim(self):
        return self.lower.size

    def resolvent(self, lam, zeta):
        zeta = np.asarray(zeta, dtype=np.float64)
        z = kernels.clip_box(zeta, self.lower, self.upper)
        return z, (zeta - z) / lam

    def resolvent_rows(self, lam, Z):
        X = np.minimum(np.maximum(Z, self.lower), self.upper)
        return X, (Z - X) / lam

    def gap(self, x, v):
        self._check(x, v)
        return kernels.box_gap(x, v, self.lower, self.upper, DOMAIN_TOL)

    def gap_rows(self, X, V):
        lo, hi = self.lower, self.upper
        out = np.maximum(
            np.sum(np.maximum(V * (hi - X), V * (lo - X)), axis=1), 0.0)
        outside = (np.any(X < lo - DOMAIN_TOL * (1.0 + np.abs(lo)), axis=1)
                   | np.any(X > hi + DOMAIN_TOL * (1.0 + np.abs(hi)), axis=1))
        out[outside] = math.inf
        return out

    def selection(self, x, target):
        return kernels.box_selection(x, target, self.lower, self.upper)

    def selection_rows(self, x, T):
        at_lo = x <= self.lower
        at_hi = x >= self.upper
        out = np.zeros_like(T)
        out[:, at_lo] = np.minimum(T[:, at_lo], 0.0)
        out[:, at_hi] = np.maximum(T[:, at_hi], 0.0)
        both = at_lo & at_hi
        out[:, both] = T[:, both]
        return out

    def project_domain(self, x):
        return kernels.clip_box(x, self.lower, self.upper)

    def contains(self, x, tol=0.0):
        x = np.asarray(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def scaled(self, lam):
        return self

    def to_dict(self):
        return {"kind": self.kind, "lower": self.lower.tolist(),
                "upper": self.upper.tolist()}


class Shifted(MonotoneOp):
    """``T + alpha*I`` for a catalog operator ``T`` and ``alpha >= 0``."""

    kind = "shifted"

    def __init__(self, base, alpha):
        alpha = float(alpha)
        if not alpha >= 0.0 or not math.isfinite(alpha):
            raise ValueError("alpha must be nonnegative")
        self.base = base
        self.alpha = alpha
        self.smooth = base.smooth

    @property
    def dim(self):
        return self.base.dim

    def linear_part(self):
        return self.base.linear_part() + self.alpha * np.eye(self.dim)

    def apply(self, x):
        return self.base.apply(x) + self.alpha * np.asarray(x)

    def resolvent(self, lam, zeta):
        zeta = np.asarray(zeta, dtype=np.float64)
        s = 1.0 + lam * self.alpha
        z, _ = self.base.resolvent(lam / s, zeta / s)
        return z, (zeta - z) / lam

    def resolvent_rows(self, lam, Z):
        s = 1.0 + lam * self.alpha
        X, _ = self.base.resolvent_rows(lam / s, Z / s)
        return X, (Z - X) / lam

    def gap_rows(self, X, V):
        return self.base.gap_rows(X, V - self.alpha * X)

    def selection_rows(self, x, T):
        x = np.asarray(x, dtype=np.float64)
        return self.base.selection_rows(x, T - self.alpha * x) + self.alpha * x

    def gap(self, x, v):
        # alpha*I is exact, so the base gap at the shifted value bounds the sum
        self._check(x, v)
        return self.base.gap(x, np.asarray(v) - self.alpha * np.asarray(x))

    def selection(self, x, target):
        x = np.asarray(x, dtype=np.float64)
        return self.base.selection(x, np.asarray(target) - self.alpha * x) \
            + self.alpha * x

    def project_domain(self, x):
        return self.base.project_domain(x)

    def scaled(self, lam):
        return Shifted(self.base.scaled(lam), lam * self.alpha)

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(),
                "alpha": self.alpha}


def op_from_dict(d):
    """Inverse of ``MonotoneOp.to_dict``."""
    try:
        kind = d["kind"]
        if kind == "affine":
            return AffinePD(d["M"], d.get("S"), d.get("c"))
        if kind == "grad_quadratic":
            return GradQuadratic(d["P"], d["q"])
        if kind == "l1":
            return SubdiffL1(d["tau"], d["dim"])
        if kind == "box":
            return NormalCone(d["lower"], d["upper"])
        if kind == "shifted":
            return Shifted(op_from_dict(d["base"]), d["alpha"])
    except KeyError as exc:
        raise ValueError(f"operator spec missing field {exc.args[0]!r}") from None
    raise ValueError(f"unknown operator kind {d.get('kind')!r}")


@dataclass(frozen=True)
class ExtendedSolution:
    """A pair with ``w_star in B(z_star)`` and ``-w_star in A(z_star)``."""

    z_star: np.ndarray
    w_star: np.ndarray

    def __post_init__(self):
        z = vec(self.z_star)
        object.__setattr__(self, "z_star", z)
        object.__setattr__(self, "w_star", vec(self.w_star, dim=z.size))

    def gaps(self, A, B):
        return (enlargement_gap(A, self.z_star, -self.w_star),
                enlargement_gap(B, self.z_star, self.w_star))

    def is_valid(self, A, B, tol=1e-8):
        ga, gb = self.gaps(A, B)
        return ga <= tol and gb <= tol


def exact_resolvent(op, lam, zeta):
    """Solve ``v in op(z)``, ``lam*v + z - zeta = 0``; returns ``(z, v)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    zeta = np.asarray(zeta, dtype=np.float64)
    op._check(zeta)
    return op.resolvent(lam, zeta)


def enlargement_gap(op, x, v):
    return op.gap(np.asarray(x, dtype=np.float64), np.asarray(v, dtype=np.float64))


def scaled_gap_identity_check(op, x, v, lam, rtol=1e-9):
    """Check ``gap(lam*op)(x, lam*v) == lam * gap(op)(x, v)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    v = np.asarray(v, dtype=np.float64)
    lhs = enlargement_gap(op.scaled(lam), x, lam * v)
    rhs = lam * enlargement_gap(op, x, v)
    if math.isinf(lhs) or math.isinf(rhs):
        return math.isinf(lhs) and math.isinf(rhs)
    return abs(lhs - rhs) <= rtol * max(abs(lhs), abs(rhs))
