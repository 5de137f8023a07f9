"""Vectorized NumPy implementations of the hot kernels.

This is the fallback backend used when the compiled extension is not
available; both backends expose the same flat-function interface and are
cross-checked against naive loop oracles in the test suite.

All arrays are float64, C-contiguous, NCHW.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

NAME = "numpy"


def _windows(x_padded: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    # (n, c, oh, ow, kh, kw) view, stride applied on the output grid
    win = sliding_window_view(x_padded, (kh, kw), axis=(2, 3))
    return win[:, :, ::stride, ::stride]


def conv2d_forward(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    kh, kw = w.shape[2], w.shape[3]
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = _windows(x, kh, kw, stride)
    y = np.tensordot(win, w, axes=[(1, 4, 5), (1, 2, 3)])  # (n, oh, ow, c_out)
    return np.ascontiguousarray(y.transpose(0, 3, 1, 2))


def conv2d_grad_input(
    gy: np.ndarray, w: np.ndarray, stride: int, pad: int, in_h: int, in_w: int
) -> np.ndarray:
    n = gy.shape[0]
    _, c_in, kh, kw = w.shape
    oh, ow = gy.shape[2], gy.shape[3]
    gxp = np.zeros((n, c_in, in_h + 2 * pad, in_w + 2 * pad))
    # one GEMM per kernel tap, scattered onto the stride grid
    for ky in range(kh):
        for kx in range(kw):
            g = np.tensordot(gy, w[:, :, ky, kx], axes=[(1,), (0,)])  # (n, oh, ow, c_in)
            gxp[:, :, ky : ky + stride * oh : stride, kx : kx + stride * ow : stride] += (
                g.transpose(0, 3, 1, 2)
            )
    if pad:
        return np.ascontiguousarray(gxp[:, :, pad : pad + in_h, pad : pad + in_w])
    return gxp


def conv2d_grad_weight(
    x: np.ndarray, gy: np.ndarray, stride: int, pad: int, kh: int, kw: int
) -> np.ndarray:
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = _windows(x, kh, kw, stride)
    # (c_out, c_in, kh, kw)
    return np.tensordot(gy, win, axes=[(0, 2, 3), (0, 2, 3)])


def box_sum(x: np.ndarray, radius: int) -> np.ndarray:
    """Sliding (2r+1)^2 window sum, windows clipped at the borders."""
    n, c, h, w = x.shape
    if radius == 0:
        return x.copy()
    s = x.cumsum(axis=2).cumsum(axis=3)
    s = np.pad(s, ((0, 0), (0, 0), (1, 0), (1, 0)))  # leading zero row/col
    ylo = np.clip(np.arange(h) - radius, 0, h)          # inclusive low, padded coords
    yhi = np.clip(np.arange(h) + radius, 0, h - 1) + 1  # exclusive high
    xlo = np.clip(np.arange(w) - radius, 0, w)
    xhi = np.clip(np.arange(w) + radius, 0, w - 1) + 1
    return (
        s[:, :, yhi[:, None], xhi[None, :]]
        - s[:, :, ylo[:, None], xhi[None, :]]
        - s[:, :, yhi[:, None], xlo[None, :]]
        + s[:, :, ylo[:, None], xlo[None, :]]
    )
