# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


def soft_threshold(x, double thr):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double a
    for i in range(n):
        a = xv[i]
        if a > thr:
            o[i] = a - thr
        elif a < -thr:
            o[i] = a + thr
        else:
            o[i] = 0.0
    return out


def clip_box(x, lo, hi):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] l = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] h = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        if xv[i] < l[i]:
            o[i] = l[i]
        elif xv[i] > h[i]:
            o[i] = h[i]
        else:
            o[i] = xv[i]
    return out


def l1_gap(x, v, double tau, double rtol):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    cdef double g = 0.0, lim = tau * (1.0 + rtol)
    for i in range(n):
        if fabs(vv[i]) > lim:
            return INFINITY
    for i in range(n):
        g += tau * fabs(xv[i]) - xv[i] * vv[i]
    return g if g > 0.0 else 0.0


def box_gap(x, v, lo, hi, double atol):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef const double[::1] l = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] h = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    cdef double g = 0.0, a, b
    for i in range(n):
        if xv[i] < l[i] - atol * (1.0 + fabs(l[i])) or \
                xv[i] > h[i] + atol * (1.0 + fabs(h[i])):
            return INFINITY
    for i in range(n):
        a = vv[i] * (h[i] - xv[i])
        b = vv[i] * (l[i] - xv[i])
        g += a if a > b else b
    return g if g > 0.0 else 0.0


def l1_selection(x, target, double tau):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] t = np.ascontiguousarray(target, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        if xv[i] > 0.0:
            o[i] = tau
        elif xv[i] < 0.0:
            o[i] = -tau
        elif t[i] > tau:
            o[i] = tau
        elif t[i] < -tau:
            o[i] = -tau
        else:
            o[i] = t[i]
    return out


def box_selection(x, target, lo, hi):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] t = np.ascontiguousarray(target, dtype=np.float64)
    cdef const double[::1] l = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] h = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    cdef bint at_lo, at_hi
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        at_lo = xv[i] <= l[i]
        at_hi = xv[i] >= h[i]
        if at_lo and at_hi:
            o[i] = t[i]
        elif at_lo:
            o[i] = t[i] if t[i] < 0.0 else 0.0
        elif at_hi:
            o[i] = t[i] if t[i] > 0.0 else 0.0
        else:
            o[i] = 0.0
    return out


cdef double _gap(const double[:, ::1] P, const double[::1] q, double tau,
                 const double[::1] z, const double[::1] res,
                 double qq):
    cdef Py_ssize_t m = P.shape[0], n = P.shape[1], i, j
    cdef double g, gmax = 0.0, rr = 0.0, l1 = 0.0, scale, d, dd = 0.0
    for j in range(n):
        g = 0.0
        for i in range(m):
            g += P[i, j] * res[i]
        if fabs(g) > gmax:
            gmax = fabs(g)
        l1 += fabs(z[j])
    for i in range(m):
        rr += res[i] * res[i]
    scale = 1.0 if gmax <= tau else tau / gmax
    for i in range(m):
        d = q[i] - scale * res[i]
        dd += d * d
    return 0.5 * rr + tau * l1 - (0.5 * qq - 0.5 * dd)


def lasso_gap(P, q, double tau, z):
    cdef const double[:, ::1] Pv = np.ascontiguousarray(P, dtype=np.float64)
    qa = np.ascontiguousarray(q, dtype=np.float64)
    za = np.ascontiguousarray(z, dtype=np.float64)
    res = qa - np.asarray(Pv) @ za
    return _gap(Pv, qa, tau, za, res, float(qa @ qa))


def lasso_cd(P, q, double tau, z0, long max_sweeps, double gap_tol):
    cdef const double[:, ::1] Pv = np.ascontiguousarray(P, dtype=np.float64)
    qa = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[::1] qv = qa
    za = np.array(z0, dtype=np.float64)
    cdef double[::1] z = za
    cdef Py_ssize_t m = Pv.shape[0], n = Pv.shape[1], i, j
    resa = qa - np.asarray(Pv) @ za
    cdef double[::1] res = resa
    colsqa = np.einsum("ij,ij->j", np.asarray(Pv), np.asarray(Pv))
    cdef double[::1] colsq = colsqa
    cdef double qq = float(qa @ qa), rho, old, new, delta
    cdef double gap = _gap(Pv, qv, tau, z, res, qq)
    cdef long sweeps = 0
    while gap > gap_tol and sweeps < max_sweeps:
        for j in range(n):
            if colsq[j] == 0.0:
                continue
            old = z[j]
            rho = 0.0
            for i in range(m):
                rho += Pv[i, j] * res[i]
            rho += colsq[j] * old
            if rho > tau:
                new = (rho - tau) / colsq[j]
            elif rho < -tau:
                new = (rho + tau) / colsq[j]
            else:
                new = 0.0
            if new != old:
                delta = new - old
                for i in range(m):
                    res[i] -= delta * Pv[i, j]
                z[j] = new
        sweeps += 1
        gap = _gap(Pv, qv, tau, z, res, qq)
    return za, sweeps, gap
