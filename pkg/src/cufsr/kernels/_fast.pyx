# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled float32 convolution kernels (channel-last, "same" zero padding).

Semantics match numpy_backend exactly; see that module for the layout
contract.  Only float32 is handled here -- the dispatcher falls back to
numpy for float64 (used by the gradient-checking mode).
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "c"


def conv2d_fwd(cnp.ndarray x_arr, cnp.ndarray w_arr, b_arr):
    cdef float[:, :, ::1] x = np.ascontiguousarray(x_arr, dtype=np.float32)
    cdef float[:, :, :, ::1] w = np.ascontiguousarray(w_arr, dtype=np.float32)
    cdef int h = x.shape[0], ww = x.shape[1], cin = x.shape[2]
    cdef int cout = w.shape[0], k = w.shape[2], p = (k - 1) // 2
    out_arr = np.zeros((h, ww, cout), dtype=np.float32)
    cdef float[:, :, ::1] out = out_arr
    cdef float[::1] b
    cdef int y, xx, co, ci, ki, kj, sy, sx
    cdef float acc
    if b_arr is not None:
        b = np.ascontiguousarray(b_arr, dtype=np.float32)
        for y in range(h):
            for xx in range(ww):
                for co in range(cout):
                    out[y, xx, co] = b[co]
    for y in range(h):
        for xx in range(ww):
            for ki in range(k):
                sy = y + ki - p
                if sy < 0 or sy >= h:
                    continue
                for kj in range(k):
                    sx = xx + kj - p
                    if sx < 0 or sx >= ww:
                        continue
                    for co in range(cout):
                        acc = 0.0
                        for ci in range(cin):
                            acc += w[co, ci, ki, kj] * x[sy, sx, ci]
                        out[y, xx, co] += acc
    return out_arr


def conv2d_bwd_x(cnp.ndarray gy_arr, cnp.ndarray w_arr):
    cdef float[:, :, ::1] gy = np.ascontiguousarray(gy_arr, dtype=np.float32)
    cdef float[:, :, :, ::1] w = np.ascontiguousarray(w_arr, dtype=np.float32)
    cdef int h = gy.shape[0], ww = gy.shape[1], cout = gy.shape[2]
    cdef int cin = w.shape[1], k = w.shape[2], p = (k - 1) // 2
    gx_arr = np.zeros((h, ww, cin), dtype=np.float32)
    cdef float[:, :, ::1] gx = gx_arr
    cdef int y, xx, co, ci, ki, kj, sy, sx
    cdef float g
    for y in range(h):
        for xx in range(ww):
            for ki in range(k):
                sy = y + ki - p
                if sy < 0 or sy >= h:
                    continue
                for kj in range(k):
                    sx = xx + kj - p
                    if sx < 0 or sx >= ww:
                        continue
                    for co in range(cout):
                        g = gy[y, xx, co]
                        for ci in range(cin):
                            gx[sy, sx, ci] += g * w[co, ci, ki, kj]
    return gx_arr


def conv2d_bwd_w(cnp.ndarray x_arr, cnp.ndarray gy_arr, int k):
    cdef float[:, :, ::1] x = np.ascontiguousarray(x_arr, dtype=np.float32)
    cdef float[:, :, ::1] gy = np.ascontiguousarray(gy_arr, dtype=np.float32)
    cdef int h = x.shape[0], ww = x.shape[1], cin = x.shape[2]
    cdef int cout = gy.shape[2], p = (k - 1) // 2
    gw_arr = np.zeros((cout, cin, k, k), dtype=np.float32)
    cdef float[:, :, :, ::1] gw = gw_arr
    cdef int y, xx, co, ci, ki, kj, sy, sx
    cdef float g
    for y in range(h):
        for xx in range(ww):
            for ki in range(k):
                sy = y + ki - p
                if sy < 0 or sy >= h:
                    continue
                for kj in range(k):
                    sx = xx + kj - p
                    if sx < 0 or sx >= ww:
                        continue
                    for co in range(cout):
                        g = gy[y, xx, co]
                        for ci in range(cin):
                            gw[co, ci, ki, kj] += g * x[sy, sx, ci]
    return gw_arr


def depthwise_fwd(cnp.ndarray x_arr, cnp.ndarray w_arr):
    cdef float[:, :, ::1] x = np.ascontiguousarray(x_arr, dtype=np.float32)
    cdef float[:, :, ::1] w = np.ascontiguousarray(w_arr, dtype=np.float32)
    cdef int h = x.shape[0], ww = x.shape[1], c = x.shape[2]
    cdef int k = w.shape[1], p = (k - 1) // 2
    out_arr = np.zeros((h, ww, c), dtype=np.float32)
    cdef float[:, :, ::1] out = out_arr
    cdef int y, xx, ch, ki, kj, sy, sx
    for y in range(h):
        for xx in range(ww):
            for ki in range(k):
                sy = y + ki - p
                if sy < 0 or sy >= h:
                    continue
                for kj in range(k):
                    sx = xx + kj - p
                    if sx < 0 or sx >= ww:
                        continue
                    for ch in range(c):
                        out[y, xx, ch] += w[ch, ki, kj] * x[sy, sx, ch]
    return out_arr


def depthwise_bwd_x(cnp.ndarray gy_arr, cnp.ndarray w_arr):
    cdef float[:, :, ::1] gy = np.ascontiguousarray(gy_arr, dtype=np.float32)
    cdef float[:, :, ::1] w = np.ascontiguousarray(w_arr, dtype=np.float32)
    cdef int h = gy.shape[0], ww = gy.shape[1], c = gy.shape[2]
    cdef int k = w.shape[1], p = (k - 1) // 2
    gx_arr = np.zeros((h, ww, c), dtype=np.float32)
    cdef float[:, :, ::1] gx = gx_arr
    cdef int y, xx, ch, ki, kj, sy, sx
    for y in range(h):
        for xx in range(ww):
            for ki in range(k):
                sy = y + ki - p
                if sy < 0 or sy >= h:
                    continue
                for kj in range(k):
                    sx = xx + kj - p
                    if sx < 0 or sx >= ww:
                        continue
                    for ch in range(c):
                        gx[sy, sx, ch] += gy[y, xx, ch] * w[ch, ki, kj]
    return gx_arr


def depthwise_bwd_w(cnp.ndarray x_arr, cnp.ndarray gy_arr, int k):
    cdef float[:, :, ::1] x = np.ascontiguousarray(x_arr, dtype=np.float32)
    cdef float[:, :, ::1] gy = np.ascontiguousarray(gy_arr, dtype=np.float32)
    cdef int h = x.shape[0], ww = x.shape[1], c = x.shape[2]
    cdef int p = (k - 1) // 2
    gw_arr = np.zeros((c, k, k), dtype=np.float32)
    cdef float[:, :, ::1] gw = gw_arr
    cdef int y, xx, ch, ki, kj, sy, sx
    for y in range(h):
        for xx in range(ww):
            for ki in range(k):
                sy = y + ki - p
                if sy < 0 or sy >= h:
                    continue
                for kj in range(k):
                    sx = xx + kj - p
                    if sx < 0 or sx >= ww:
                        continue
                    for ch in range(c):
                        gw[ch, ki, kj] += gy[y, xx, ch] * x[sy, sx, ch]
    return gw_arr
