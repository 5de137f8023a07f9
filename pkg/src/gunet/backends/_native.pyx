# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: direct convolution family and clipped box sums.

Same interface and same results as gunet.backends.numpy_kernels (the test
suite checks both against naive loop oracles). Single-threaded on purpose:
determinism must not depend on thread count.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "cython"


cdef inline Py_ssize_t _ceil_div(Py_ssize_t a, Py_ssize_t b) noexcept:
    # ceil(a / b) for b > 0, a may be negative
    if a <= 0:
        return 0
    return (a + b - 1) // b


def conv2d_forward(cnp.ndarray x_arr, cnp.ndarray w_arr, int stride, int pad):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(x_arr)
    cdef double[:, :, :, ::1] w = np.ascontiguousarray(w_arr)
    cdef Py_ssize_t n = x.shape[0], cin = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t cout = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t oh = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t ow = (wd + 2 * pad - kw) // stride + 1
    out_arr = np.zeros((n, cout, oh, ow))
    cdef double[:, :, :, ::1] y = out_arr
    cdef Py_ssize_t b, co, ci, ky, kx, oy, ox, iy, ox_lo, ox_hi, oy_lo, oy_hi, xoff
    cdef double wv
    cdef double[::1] acc
    acc_arr = np.empty(ow)
    acc = acc_arr
    for b in range(n):
        for co in range(cout):
            for oy in range(oh):
                acc[:] = 0.0
                for ci in range(cin):
                    for ky in range(kh):
                        iy = oy * stride - pad + ky
                        if iy < 0 or iy >= h:
                            continue
                        for kx in range(kw):
                            wv = w[co, ci, ky, kx]
                            xoff = kx - pad
                            if xoff > wd - 1:
                                continue  # no valid ox (C // truncates negatives)
                            # valid ox range: 0 <= ox*stride + xoff < wd
                            ox_lo = _ceil_div(-xoff, stride)
                            ox_hi = (wd - 1 - xoff) // stride
                            if ox_hi > ow - 1:
                                ox_hi = ow - 1
                            for ox in range(ox_lo, ox_hi + 1):
                                acc[ox] += wv * x[b, ci, iy, ox * stride + xoff]
                for ox in range(ow):
                    y[b, co, oy, ox] = acc[ox]
    return out_arr


def conv2d_grad_input(cnp.ndarray gy_arr, cnp.ndarray w_arr, int stride, int pad,
                      Py_ssize_t in_h, Py_ssize_t in_w):
    cdef double[:, :, :, ::1] gy = np.ascontiguousarray(gy_arr)
    cdef double[:, :, :, ::1] w = np.ascontiguousarray(w_arr)
    cdef Py_ssize_t n = gy.shape[0], cout = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    cdef Py_ssize_t cin = w.shape[1], kh = w.shape[2], kw = w.shape[3]
    out_arr = np.zeros((n, cin, in_h, in_w))
    cdef double[:, :, :, ::1] gx = out_arr
    cdef Py_ssize_t b, co, ci, ky, kx, oy, ox, iy, xoff, ox_lo, ox_hi
    cdef double wv
    for b in range(n):
        for co in range(cout):
            for ci in range(cin):
                for ky in range(kh):
                    for kx in range(kw):
                        wv = w[co, ci, ky, kx]
                        if wv == 0.0:
                            continue
                        xoff = kx - pad
                        if xoff > in_w - 1:
                            continue
                        ox_lo = _ceil_div(-xoff, stride)
                        ox_hi = (in_w - 1 - xoff) // stride
                        if ox_hi > ow - 1:
                            ox_hi = ow - 1
                        for oy in range(oh):
                            iy = oy * stride - pad + ky
                            if iy < 0 or iy >= in_h:
                                continue
                            for ox in range(ox_lo, ox_hi + 1):
                                gx[b, ci, iy, ox * stride + xoff] += wv * gy[b, co, oy, ox]
    return out_arr


def conv2d_grad_weight(cnp.ndarray x_arr, cnp.ndarray gy_arr, int stride, int pad,
                       Py_ssize_t kh, Py_ssize_t kw):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(x_arr)
    cdef double[:, :, :, ::1] gy = np.ascontiguousarray(gy_arr)
    cdef Py_ssize_t n = x.shape[0], cin = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t cout = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    out_arr = np.zeros((cout, cin, kh, kw))
    cdef double[:, :, :, ::1] gw = out_arr
    cdef Py_ssize_t b, co, ci, ky, kx, oy, ox, iy, xoff, ox_lo, ox_hi
    cdef double s
    for co in range(cout):
        for ci in range(cin):
            for ky in range(kh):
                for kx in range(kw):
                    s = 0.0
                    xoff = kx - pad
                    if xoff > wd - 1:
                        gw[co, ci, ky, kx] = 0.0
                        continue
                    ox_lo = _ceil_div(-xoff, stride)
                    ox_hi = (wd - 1 - xoff) // stride
                    if ox_hi > ow - 1:
                        ox_hi = ow - 1
                    for b in range(n):
                        for oy in range(oh):
                            iy = oy * stride - pad + ky
                            if iy < 0 or iy >= h:
                                continue
                            for ox in range(ox_lo, ox_hi + 1):
                                s += gy[b, co, oy, ox] * x[b, ci, iy, ox * stride + xoff]
                    gw[co, ci, ky, kx] = s
    return out_arr


def box_sum(cnp.ndarray x_arr, int radius):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(x_arr)
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    if radius == 0:
        return np.array(x_arr, copy=True)
    out_arr = np.empty((n, c, h, w))
    cdef double[:, :, :, ::1] out = out_arr
    # integral image with a leading zero row/col, per (n, c) plane
    s_arr = np.empty((h + 1, w + 1))
    cdef double[:, ::1] s = s_arr
    cdef Py_ssize_t b, ch, i, j, ylo, yhi, xlo, xhi
    cdef double row
    for b in range(n):
        for ch in range(c):
            for j in range(w + 1):
                s[0, j] = 0.0
            for i in range(h):
                row = 0.0
                s[i + 1, 0] = 0.0
                for j in range(w):
                    row += x[b, ch, i, j]
                    s[i + 1, j + 1] = s[i, j + 1] + row
            for i in range(h):
                ylo = i - radius
                if ylo < 0:
                    ylo = 0
                yhi = i + radius
                if yhi > h - 1:
                    yhi = h - 1
                yhi += 1
                for j in range(w):
                    xlo = j - radius
                    if xlo < 0:
                        xlo = 0
                    xhi = j + radius
                    if xhi > w - 1:
                        xhi = w - 1
                    xhi += 1
                    out[b, ch, i, j] = s[yhi, xhi] - s[ylo, xhi] - s[yhi, xlo] + s[ylo, xlo]
    return out_arr
