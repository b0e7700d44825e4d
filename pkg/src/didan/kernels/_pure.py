"""Numpy reference implementations of the attention hot-path kernels.

These are the fallback backend; didan.kernels._core holds the compiled
equivalents. Both backends must agree to within float rounding, which
tests/test_kernels.py checks whenever the extension is present.
"""

import numpy as np

COSINE_EPS = 1e-8


def softmax_rows_fwd(x):
    m = x.max(axis=1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_bwd(y, grad):
    inner = (grad * y).sum(axis=1, keepdims=True)
    return y * (grad - inner)


def cosine_matrix_fwd(v, w, eps=COSINE_EPS):
    nv = np.sqrt((v * v).sum(axis=1))
    nw = np.sqrt((w * w).sum(axis=1))
    denom = np.maximum(np.outer(nv, nw), eps)
    return (v @ w.T) / denom


def cosine_matrix_bwd(v, w, grad, eps=COSINE_EPS):
    nv = np.sqrt((v * v).sum(axis=1))
    nw = np.sqrt((w * w).sum(axis=1))
    prod = np.outer(nv, nw)
    denom = np.maximum(prod, eps)
    s = (v @ w.T) / denom
    # Where the norm product is clamped the denominator is constant, so
    # only the numerator term survives.
    live = prod > eps
    gd = grad / denom
    m = grad * s * live
    nv2 = nv * nv
    nw2 = nw * nw
    coef_v = np.where(nv2 > 0.0, m.sum(axis=1) / np.where(nv2 > 0.0, nv2, 1.0), 0.0)
    coef_w = np.where(nw2 > 0.0, m.sum(axis=0) / np.where(nw2 > 0.0, nw2, 1.0), 0.0)
    gv = gd @ w - coef_v[:, None] * v
    gw = gd.T @ v - coef_w[:, None] * w
    return gv.astype(v.dtype, copy=False), gw.astype(w.dtype, copy=False)
