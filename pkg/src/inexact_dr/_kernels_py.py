"""Pure-Python/numpy reference kernels.

Same signatures as the compiled ``_kernels`` extension. Used when the
extension is not built or when ``INEXACT_DR_PURE_PYTHON=1``.
"""

import math

import numpy as np


def soft_threshold(x, thr):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)


def clip_box(x, lo, hi):
    return np.minimum(np.maximum(np.asarray(x, dtype=np.float64), lo), hi)


def l1_gap(x, v, tau, rtol):
    """Fenchel gap of ``tau*||.||_1`` at ``(x, v)``; inf outside the dual ball."""
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if np.any(np.abs(v) > tau * (1.0 + rtol)):
        return math.inf
    g = float(np.sum(tau * np.abs(x) - x * v))
    return g if g > 0.0 else 0.0


def box_gap(x, v, lo, hi, atol):
    """Fenchel gap of the box indicator at ``(x, v)``; inf when x leaves the box."""
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if np.any(x < lo - atol * (1.0 + np.abs(lo))) or \
            np.any(x > hi + atol * (1.0 + np.abs(hi))):
        return math.inf
    g = float(np.sum(np.maximum(v * (hi - x), v * (lo - x))))
    return g if g > 0.0 else 0.0


def l1_selection(x, target, tau):
    """Element of ``tau*d||.||_1(x)`` nearest to `target`."""
    x = np.asarray(x, dtype=np.float64)
    out = np.clip(np.asarray(target, dtype=np.float64), -tau, tau)
    out[x > 0.0] = tau
    out[x < 0.0] = -tau
    return out


def box_selection(x, target, lo, hi):
    """Element of the box normal cone at `x` nearest to `target`.

    `x` must lie in the box.
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    out = np.zeros_like(t)
    at_lo = x <= lo
    at_hi = x >= hi
    both = at_lo & at_hi
    out[at_lo] = np.minimum(t[at_lo], 0.0)
    out[at_hi] = np.maximum(t[at_hi], 0.0)
    out[both] = t[both]
    return out


def lasso_gap(P, q, tau, z):
    """Duality gap of ``0.5*||Pz - q||^2 + tau*||z||_1`` at `z`."""
    res = q - P @ z
    g = np.abs(P.T @ res).max() if z.size else 0.0
    scale = 1.0 if g <= tau else tau / g
    primal = 0.5 * float(res @ res) + tau * float(np.abs(z).sum())
    theta = scale * res
    d = q - theta
    dual = 0.5 * float(q @ q) - 0.5 * float(d @ d)
    return primal - dual


def lasso_cd(P, q, tau, z0, max_sweeps, gap_tol):
    """Cyclic coordinate descent for the LASSO.

    Returns ``(z, sweeps, gap)``; stops once the duality gap is at most
    `gap_tol` or after `max_sweeps` sweeps.
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    z = np.array(z0, dtype=np.float64)
    m, n = P.shape
    colsq = np.einsum("ij,ij->j", P, P)
    res = q - P @ z
    gap = lasso_gap(P, q, tau, z)
    sweeps = 0
    while gap > gap_tol and sweeps < max_sweeps:
        for j in range(n):
            if colsq[j] == 0.0:
                continue
            col = P[:, j]
            old = z[j]
            rho = float(col @ res) + colsq[j] * old
            if rho > tau:
                new = (rho - tau) / colsq[j]
            elif rho < -tau:
                new = (rho + tau) / colsq[j]
            else:
                new = 0.0
            if new != old:
                res -= (new - old) * col
                z[j] = new
        sweeps += 1
        gap = lasso_gap(P, q, tau, z)
    return z, sweeps, gap
