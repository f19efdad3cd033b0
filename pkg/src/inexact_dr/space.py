"""Finite-dimensional real Hilbert space primitives.

Vectors are plain 1-D ``float64`` numpy arrays. :func:`vec` validates and
freezes them; :class:`PairPoint` is the product-space point ``(z, lam*w)``
in which every Fejer estimate is measured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["vec", "inner", "norm", "norm_sq", "PairPoint", "pair_norm_sq",
           "pair_inner"]


def vec(x, dim=None):
    """Return a read-only float64 copy of `x`, checking shape and finiteness.

    Raises
    ------
    ValueError
        If `x` is not 1-D, is empty, has non-finite entries, or does not
        match `dim`.
    """
    a = np.atleast_1d(np.array(x, dtype=np.float64))
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {a.shape}")
    if dim is not None and a.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite coordinates")
    a.setflags(write=False)
    return a


def _check_dims(u, v):
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")


def inner(u, v):
    """Euclidean inner product; raises ``ValueError`` on dimension mismatch."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_dims(u, v)
    return float(np.dot(u, v))


def norm_sq(u):
    u = np.asarray(u, dtype=np.float64)
    return float(np.dot(u, u))


def norm(u):
    return float(np.sqrt(norm_sq(u)))


@dataclass(frozen=True)
class PairPoint:
    """Point ``(z, lw)`` of ``H x H`` where ``lw`` holds ``lam * w``."""

    z: np.ndarray
    lw: np.ndarray

    def __post_init__(self):
        z = vec(self.z)
        lw = vec(self.lw, dim=z.size)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "lw", lw)

    @classmethod
    def from_zw(cls, z, w, lam):
        return cls(np.asarray(z, dtype=np.float64),
                   lam * np.asarray(w, dtype=np.float64))

    @property
    def dim(self):
        return self.z.size

    def __sub__(self, other):
        return PairPoint(self.z - other.z, self.lw - other.lw)


def pair_inner(p, q):
    return inner(p.z, q.z) + inner(p.lw, q.lw)


def pair_norm_sq(p):
    """``||p.z||^2 + ||p.lw||^2``."""
    return norm_sq(p.z) + norm_sq(p.lw)
