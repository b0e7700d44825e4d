# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled attention hot-path kernels (cosine similarity matrix and
row softmax, forward and backward). Semantics match didan.kernels._pure."""

import numpy as np

cimport cython
from libc.math cimport exp, sqrt

ctypedef fused floating:
    float
    double

COSINE_EPS = 1e-8


def softmax_rows_fwd(floating[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, j
    cdef double m, z, e
    if floating is float:
        out_np = np.empty((n, d), dtype=np.float32)
    else:
        out_np = np.empty((n, d), dtype=np.float64)
    cdef floating[:, ::1] out = out_np
    for i in range(n):
        m = x[i, 0]
        for j in range(1, d):
            if x[i, j] > m:
                m = x[i, j]
        z = 0.0
        for j in range(d):
            e = exp(x[i, j] - m)
            out[i, j] = <floating> e
            z += e
        for j in range(d):
            out[i, j] = <floating> (out[i, j] / z)
    return out_np


def softmax_rows_bwd(floating[:, ::1] y, floating[:, ::1] grad):
    cdef Py_ssize_t n = y.shape[0], d = y.shape[1]
    cdef Py_ssize_t i, j
    cdef double inner
    if floating is float:
        out_np = np.empty((n, d), dtype=np.float32)
    else:
        out_np = np.empty((n, d), dtype=np.float64)
    cdef floating[:, ::1] out = out_np
    for i in range(n):
        inner = 0.0
        for j in range(d):
            inner += grad[i, j] * y[i, j]
        for j in range(d):
            out[i, j] = <floating> (y[i, j] * (grad[i, j] - inner))
    return out_np


# The O(m*n*d) inner-product block goes through BLAS (np.dot); only the
# O((m+n)*d) norms and the O(m*n) normalization/clamp logic stay as
# compiled loops, so large shapes keep gemm throughput.


def cosine_matrix_fwd(floating[:, ::1] v, floating[:, ::1] w, double eps=1e-8):
    cdef Py_ssize_t m = v.shape[0], n = w.shape[0], d = v.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, denom
    nv_np = np.empty(m, dtype=np.float64)
    nw_np = np.empty(n, dtype=np.float64)
    cdef double[::1] nv = nv_np, nw = nw_np
    out_np = np.dot(np.asarray(v), np.asarray(w).T)
    cdef floating[:, ::1] out = out_np
    for i in range(m):
        acc = 0.0
        for k in range(d):
            acc += v[i, k] * v[i, k]
        nv[i] = sqrt(acc)
    for j in range(n):
        acc = 0.0
        for k in range(d):
            acc += w[j, k] * w[j, k]
        nw[j] = sqrt(acc)
    for i in range(m):
        for j in range(n):
            denom = nv[i] * nw[j]
            if denom < eps:
                denom = eps
            out[i, j] = <floating> (out[i, j] / denom)
    return out_np


def cosine_matrix_bwd(floating[:, ::1] v, floating[:, ::1] w,
                      floating[:, ::1] grad, double eps=1e-8):
    cdef Py_ssize_t m = v.shape[0], n = w.shape[0], d = v.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, prod, denom, g
    nv_np = np.empty(m, dtype=np.float64)
    nw_np = np.empty(n, dtype=np.float64)
    cdef double[::1] nv = nv_np, nw = nw_np
    coefv_np = np.zeros(m, dtype=np.float64)
    coefw_np = np.zeros(n, dtype=np.float64)
    cdef double[::1] coefv = coefv_np, coefw = coefw_np
    v_np = np.asarray(v)
    w_np = np.asarray(w)
    dots_np = np.dot(v_np, w_np.T)
    cdef floating[:, ::1] dots = dots_np
    gd_np = np.empty_like(dots_np)
    cdef floating[:, ::1] gd = gd_np
    for i in range(m):
        acc = 0.0
        for k in range(d):
            acc += v[i, k] * v[i, k]
        nv[i] = sqrt(acc)
    for j in range(n):
        acc = 0.0
        for k in range(d):
            acc += w[j, k] * w[j, k]
        nw[j] = sqrt(acc)
    for i in range(m):
        for j in range(n):
            prod = nv[i] * nw[j]
            denom = prod if prod > eps else eps
            g = grad[i, j]
            gd[i, j] = <floating> (g / denom)
            if prod > eps:
                acc = g * dots[i, j] / denom
                coefv[i] += acc
                coefw[j] += acc
    gv_np = np.dot(gd_np, w_np)
    gw_np = np.dot(gd_np.T, v_np)
    cdef floating[:, ::1] gv = gv_np, gw = gw_np
    for i in range(m):
        if nv[i] > 0.0:
            acc = coefv[i] / (nv[i] * nv[i])
            for k in range(d):
                gv[i, k] -= <floating> (acc * v[i, k])
    for j in range(n):
        if nw[j] > 0.0:
            acc = coefw[j] / (nw[j] * nw[j])
            for k in range(d):
                gw[j, k] -= <floating> (acc * w[j, k])
    return gv_np, gw_np
