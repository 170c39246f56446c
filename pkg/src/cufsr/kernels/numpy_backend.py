"""Vectorized numpy implementations of the hot convolution kernels.

All convolutions use "same" zero padding with pad = (K-1)//2 and
cross-correlation semantics.  Layout is channel-last: images/features are
[H, W, C], full conv weights are [Cout, Cin, K, K], depthwise weights are
[C, K, K].

These are the reference implementations; the compiled backend in _fast.pyx
must match them bit-for-bit up to summation order.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

NAME = "numpy"


def _windows(x, k):
    """[H, W, C] -> zero-padded sliding windows [H, W, C, K, K]."""
    p = (k - 1) // 2
    xp = np.pad(x, ((p, p), (p, p), (0, 0)))
    return sliding_window_view(xp, (k, k), axis=(0, 1))


def conv2d_fwd(x, w, b):
    h, ht, cin = x.shape
    cout, _, k, _ = w.shape
    cols = _windows(x, k).reshape(h * ht, cin * k * k)
    y = cols @ w.reshape(cout, cin * k * k).T
    if b is not None:
        y = y + b
    return y.reshape(h, ht, cout)


def conv2d_bwd_x(gy, w):
    h, ht, cout = gy.shape
    _, cin, k, _ = w.shape
    p = (k - 1) // 2
    gcols = gy.reshape(h * ht, cout) @ w.reshape(cout, cin * k * k)
    gcols = gcols.reshape(h, ht, cin, k, k)
    gxp = np.zeros((h + 2 * p, ht + 2 * p, cin), dtype=gy.dtype)
    for ki in range(k):
        for kj in range(k):
            gxp[ki:ki + h, kj:kj + ht] += gcols[:, :, :, ki, kj]
    return gxp[p:p + h, p:p + ht]


def conv2d_bwd_w(x, gy, k):
    h, ht, cin = x.shape
    cout = gy.shape[2]
    cols = _windows(x, k).reshape(h * ht, cin * k * k)
    gw = gy.reshape(h * ht, cout).T @ cols
    return gw.reshape(cout, cin, k, k)


def depthwise_fwd(x, w):
    k = w.shape[1]
    win = _windows(x, k)
    return np.einsum("hwckl,ckl->hwc", win, w, optimize=True)


def depthwise_bwd_x(gy, w):
    h, ht, c = gy.shape
    k = w.shape[1]
    p = (k - 1) // 2
    gxp = np.zeros((h + 2 * p, ht + 2 * p, c), dtype=gy.dtype)
    for ki in range(k):
        for kj in range(k):
            gxp[ki:ki + h, kj:kj + ht] += gy * w[:, ki, kj]
    return gxp[p:p + h, p:p + ht]


def depthwise_bwd_w(x, gy, k):
    win = _windows(x, k)
    return np.einsum("hwckl,hwc->ckl", win, gy, optimize=True)
