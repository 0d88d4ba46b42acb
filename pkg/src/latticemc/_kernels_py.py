"""Pure-Python versions of the compiled kernels.

Same floating-point operations in the same order as ``_kernels.pyx`` so the
two produce bit-identical results for identical inputs.
"""

import math

import numpy as np


def dgauss_inverse_cdf(center, sigma, u):
    # weights relative to the nearest integer, which is always in the window
    near = math.floor(center + 0.5)
    lo = min(math.ceil(center - 12.0 * sigma), near)
    hi = max(math.floor(center + 12.0 * sigma), near)
    two_s2 = 2.0 * sigma * sigma
    t0 = near - center
    off = t0 * t0
    total = 0.0
    for z in range(lo, hi + 1):
        t = z - center
        total += math.exp(-(t * t - off) / two_s2)
    target = u * total
    acc = 0.0
    for z in range(lo, hi + 1):
        t = z - center
        acc += math.exp(-(t * t - off) / two_s2)
        if acc > target:
            return z
    return hi


def imh_select(log_w_prop, log_u, log_w_cur):
    log_w_prop = np.ascontiguousarray(log_w_prop, dtype=float).tolist()
    log_u = np.ascontiguousarray(log_u, dtype=float).tolist()
    n = len(log_w_prop)
    out = [0] * n
    idx = -1
    accepts = 0
    for t in range(n):
        diff = log_w_prop[t] - log_w_cur
        if diff == diff:
            log_alpha = diff if diff < 0.0 else 0.0
            if log_u[t] <= log_alpha:
                log_w_cur = log_w_prop[t]
                idx = t
                accepts += 1
        out[t] = idx
    return np.array(out, dtype=np.int64), accepts


def klein_batch(basis_rows, gso_rows, gso_sqnorm, center, sigma, uniforms):
    basis_rows = np.asarray(basis_rows, dtype=float).tolist()
    gso_rows = np.asarray(gso_rows, dtype=float).tolist()
    gso_sqnorm = np.asarray(gso_sqnorm, dtype=float).tolist()
    center = np.asarray(center, dtype=float).tolist()
    uniforms = np.asarray(uniforms, dtype=float)
    n, d = uniforms.shape
    out = np.empty((n, d), dtype=np.int64)
    sig = [sigma / math.sqrt(q) for q in gso_sqnorm]
    for s in range(n):
        c = list(center)
        u_row = uniforms[s].tolist()
        for i in range(d - 1, -1, -1):
            g = gso_rows[i]
            dot = 0.0
            for k in range(d):
                dot += c[k] * g[k]
            zi = dgauss_inverse_cdf(dot / gso_sqnorm[i], sig[i], u_row[i])
            out[s, i] = zi
            b = basis_rows[i]
            for k in range(d):
                c[k] = c[k] - zi * b[k]
    return out
