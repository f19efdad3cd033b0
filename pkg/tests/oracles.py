"""Independent reference computations used to freeze expected values.

Nothing here imports the package's solvers or generators' internals: the
random stream is re-derived from its written description and LASSO
solutions come from accelerated proximal gradient rather than coordinate
descent.
"""

import math

import numpy as np

M64 = 2**64


def splitmix64_first(seed):
    z = (seed + 0x9E3779B97F4A7C15) % M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % M64
    return z ^ (z >> 31)


def xorshift_outputs(seed, n):
    x = splitmix64_first(seed % M64) or 0x9E3779B97F4A7C15
    out = []
    for _ in range(n):
        x ^= x >> 12
        x = (x ^ (x << 25)) % M64
        x ^= x >> 27
        out.append((x * 0x2545F4914F6CDD1D) % M64)
    return out


def uniforms(seed, n):
    return [(u >> 11) / 2.0**53 for u in xorshift_outputs(seed, n)]


def normals(seed, n):
    u = uniforms(seed, 2 * n)
    return [math.sqrt(-2 * math.log(1 - u[2 * i])) * math.cos(2 * math.pi * u[2 * i + 1])
            for i in range(n)]


def lasso_fista(P, q, tau, iters=200_000, tol=1e-15):
    """Minimise 0.5||Pz - q||^2 + tau||z||_1 by FISTA with restarts."""
    L = np.linalg.norm(P, 2) ** 2
    z = np.zeros(P.shape[1])
    y, t = z.copy(), 1.0
    for _ in range(iters):
        g = y - P.T @ (P @ y - q) / L
        z_new = np.sign(g) * np.maximum(np.abs(g) - tau / L, 0.0)
        if np.linalg.norm(z_new - z) <= tol:
            z = z_new
            break
        t_new = (1 + math.sqrt(1 + 4 * t * t)) / 2
        y = z_new + (t - 1) / t_new * (z_new - z)
        if (z_new - z) @ (y - z_new) > 0:  # restart on non-descent
            y, t_new = z_new.copy(), 1.0
        z, t = z_new, t_new
    return z


def affine_solution(MA, cA, MB, cB):
    z = np.linalg.lstsq(MA + MB, -(cA + cB), rcond=None)[0]
    return z, MB @ z + cB
