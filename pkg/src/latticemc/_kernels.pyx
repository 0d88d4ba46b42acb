# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Must stay arithmetically identical to _kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, ceil, floor, sqrt, isnan

cnp.import_array()


cdef inline long _dgauss(double center, double sigma, double u) noexcept nogil:
    # weights relative to the nearest integer, which is always in the window
    cdef double near = floor(center + 0.5)
    cdef double lo = ceil(center - 12.0 * sigma)
    cdef double hi = floor(center + 12.0 * sigma)
    cdef double two_s2 = 2.0 * sigma * sigma
    cdef double t0 = near - center
    cdef double off = t0 * t0
    cdef double total = 0.0
    cdef double acc = 0.0
    cdef double z, t, target
    if near < lo:
        lo = near
    if near > hi:
        hi = near
    z = lo
    while z <= hi:
        t = z - center
        total += exp(-(t * t - off) / two_s2)
        z += 1.0
    target = u * total
    z = lo
    while z <= hi:
        t = z - center
        acc += exp(-(t * t - off) / two_s2)
        if acc > target:
            return <long>z
        z += 1.0
    return <long>hi


def dgauss_inverse_cdf(double center, double sigma, double u):
    return _dgauss(center, sigma, u)


def imh_select(double[::1] log_w_prop, double[::1] log_u, double log_w_cur):
    cdef Py_ssize_t n = log_w_prop.shape[0]
    cdef Py_ssize_t t
    cdef long long idx = -1
    cdef long long accepts = 0
    cdef double diff, log_alpha
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] out_v = out
    with nogil:
        for t in range(n):
            diff = log_w_prop[t] - log_w_cur
            if not isnan(diff):
                log_alpha = diff if diff < 0.0 else 0.0
                if log_u[t] <= log_alpha:
                    log_w_cur = log_w_prop[t]
                    idx = t
                    accepts += 1
            out_v[t] = idx
    return out, accepts


def klein_batch(double[:, ::1] basis_rows, double[:, ::1] gso_rows, double[::1] gso_sqnorm,
                double[::1] center, double sigma, double[:, ::1] uniforms):
    cdef Py_ssize_t d = basis_rows.shape[0]
    cdef Py_ssize_t n = uniforms.shape[0]
    cdef Py_ssize_t s, i, k
    cdef double ci, si, dot
    cdef long zi
    out = np.empty((n, d), dtype=np.int64)
    cdef long long[:, ::1] out_v = out
    work = np.empty(d, dtype=np.float64)
    cdef double[::1] c = work
    with nogil:
        for s in range(n):
            for k in range(d):
                c[k] = center[k]
            for i in range(d - 1, -1, -1):
                dot = 0.0
                for k in range(d):
                    dot += c[k] * gso_rows[i, k]
                ci = dot / gso_sqnorm[i]
                si = sigma / sqrt(gso_sqnorm[i])
                zi = _dgauss(ci, si, uniforms[s, i])
                out_v[s, i] = zi
                for k in range(d):
                    c[k] = c[k] - zi * basis_rows[i, k]
    return out
