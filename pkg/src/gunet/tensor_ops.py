"""Dense rank-4 tensor primitives: convolution, resampling, box filtering.

Tensors are plain float64 NumPy arrays in (batch, channel, height, width)
order; operations are pure functions and never mutate their inputs. The
convolution family dispatches to the selected kernel backend
(``gunet.backends``); everything else is vectorized NumPy.

Convolution is cross-correlation (no kernel flip) with zero padding, the
usual deep-learning convention.
"""

from __future__ import annotations

import numpy as np

from .backends import kernels
from .errors import ShapeError

Tensor = np.ndarray  # (n, c, h, w) float64


def as_tensor(x, rank: int = 4) -> Tensor:
    """Coerce to a contiguous float64 array of the given rank."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != rank:
        raise ShapeError(f"expected a rank-{rank} array, got rank {a.ndim} with shape {a.shape}")
    return a


def conv2d(x: Tensor, w: Tensor, bias=None, stride: int = 1, pad: int = 0) -> Tensor:
    """Dense 2-D cross-correlation plus per-output-channel bias.

    Output spatial dims are floor((in + 2*pad - k) / stride) + 1.
    """
    x = as_tensor(x)
    w = as_tensor(w)
    if stride < 1:
        raise ShapeError(f"conv2d: stride must be >= 1, got {stride}")
    if x.shape[1] != w.shape[1]:
        raise ShapeError(
            f"conv2d: input has {x.shape[1]} channels but weight expects {w.shape[1]}"
        )
    kh, kw = w.shape[2], w.shape[3]
    oh = (x.shape[2] + 2 * pad - kh) // stride + 1
    ow = (x.shape[3] + 2 * pad - kw) // stride + 1
    if oh < 1 or ow < 1:
        raise ShapeError(
            f"conv2d: kernel {kh}x{kw} with pad {pad} does not fit input "
            f"{x.shape[2]}x{x.shape[3]}"
        )
    y = kernels.conv2d_forward(x, w, stride, pad)
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (w.shape[0],):
            raise ShapeError(
                f"conv2d: bias has shape {bias.shape}, expected ({w.shape[0]},)"
            )
        y += bias[None, :, None, None]
    return y


def transposed_conv2d(x: Tensor, w: Tensor, bias=None, stride: int = 1, pad: int = 0) -> Tensor:
    """Gradient-of-convolution upsampling: each input pixel stamps the kernel
    into the output at stride spacing; overlaps sum.

    Weight layout is (c_in, c_out, kh, kw); output spatial dims are
    (in - 1) * stride - 2 * pad + k.
    """
    x = as_tensor(x)
    w = as_tensor(w)
    if x.shape[1] != w.shape[0]:
        raise ShapeError(
            f"transposed_conv2d: input has {x.shape[1]} channels but weight expects {w.shape[0]}"
        )
    kh, kw = w.shape[2], w.shape[3]
    oh = (x.shape[2] - 1) * stride - 2 * pad + kh
    ow = (x.shape[3] - 1) * stride - 2 * pad + kw
    if oh < 1 or ow < 1:
        raise ShapeError(
            f"transposed_conv2d: output dims {oh}x{ow} are empty for input "
            f"{x.shape[2]}x{x.shape[3]}, kernel {kh}x{kw}, stride {stride}, pad {pad}"
        )
    # adjoint of conv2d with weight viewed as (c_out=c_in, c_in=c_out, kh, kw)
    y = kernels.conv2d_grad_input(x, w, stride, pad, oh, ow)
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (w.shape[1],):
            raise ShapeError(
                f"transposed_conv2d: bias has shape {bias.shape}, expected ({w.shape[1]},)"
            )
        y = y + bias[None, :, None, None]
    return y


def window_counts(h: int, w: int, radius: int) -> np.ndarray:
    """Pixel count of the clipped (2r+1)^2 window centred at each position."""
    cy = np.minimum(np.arange(h) + radius, h - 1) - np.maximum(np.arange(h) - radius, 0) + 1
    cx = np.minimum(np.arange(w) + radius, w - 1) - np.maximum(np.arange(w) - radius, 0) + 1
    return cy[:, None].astype(np.float64) * cx[None, :]


def box_sum(x: Tensor, radius: int) -> Tensor:
    x = as_tensor(x)
    if radius < 0:
        raise ShapeError(f"box_sum: radius must be >= 0, got {radius}")
    return kernels.box_sum(x, radius)


def box_mean(x: Tensor, radius: int) -> Tensor:
    """Per-channel local mean over the clipped square window.

    Border windows are normalized by their true (clipped) pixel count, so a
    radius larger than the image degenerates to the global mean.
    """
    x = as_tensor(x)
    if radius < 0:
        raise ShapeError(f"box_mean: radius must be >= 0, got {radius}")
    if radius == 0:
        return x.copy()
    counts = window_counts(x.shape[2], x.shape[3], radius)
    return kernels.box_sum(x, radius) / counts


def box_mean_adjoint(g: Tensor, radius: int) -> Tensor:
    """Vector-Jacobian product of box_mean (it is self-adjoint up to counts)."""
    if radius == 0:
        return g.copy()
    counts = window_counts(g.shape[2], g.shape[3], radius)
    return kernels.box_sum(g / counts, radius)


def resize_nearest(x: Tensor, factor: int = 2) -> Tensor:
    """Replicate each source pixel into a factor x factor block."""
    x = as_tensor(x)
    if factor != 2:
        raise ShapeError(f"resize_nearest: only factor 2 is supported, got {factor}")
    return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)


def resize_nearest_adjoint(g: Tensor) -> Tensor:
    n, c, h, w = g.shape
    return g.reshape(n, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


def _linear_coords(out_n: int, in_n: int):
    """Half-pixel-centre source coordinates: src = (dst + 0.5) * scale - 0.5."""
    src = (np.arange(out_n) + 0.5) * (in_n / out_n) - 0.5
    src = np.clip(src, 0.0, in_n - 1.0)
    if in_n == 1:
        return np.zeros(out_n, dtype=np.intp), np.zeros(out_n, dtype=np.intp), np.zeros(out_n)
    i0 = np.minimum(np.floor(src).astype(np.intp), in_n - 2)
    frac = src - i0
    return i0, i0 + 1, frac


def resize_bilinear(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Separable linear interpolation with half-pixel-centre alignment."""
    x = as_tensor(x)
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"resize_bilinear: target dims {out_h}x{out_w} must be positive")
    y0, y1, fy = _linear_coords(out_h, x.shape[2])
    x0, x1, fx = _linear_coords(out_w, x.shape[3])
    rows = x[:, :, y0, :] * (1.0 - fy)[None, None, :, None] + x[:, :, y1, :] * fy[None, None, :, None]
    out = rows[:, :, :, x0] * (1.0 - fx) + rows[:, :, :, x1] * fx
    return np.ascontiguousarray(out)


def resize_bilinear_adjoint(g: Tensor, in_h: int, in_w: int) -> Tensor:
    """Exact adjoint of resize_bilinear for the same size pair."""
    g = as_tensor(g)
    n, c, oh, ow = g.shape
    x0, x1, fx = _linear_coords(ow, in_w)
    cols = np.zeros((n, c, oh, in_w))
    # scatter along width; np.add.at handles the duplicate clamped indices
    np.add.at(cols.transpose(3, 0, 1, 2), x0, (g * (1.0 - fx)).transpose(3, 0, 1, 2))
    np.add.at(cols.transpose(3, 0, 1, 2), x1, (g * fx).transpose(3, 0, 1, 2))
    y0, y1, fy = _linear_coords(oh, in_h)
    out = np.zeros((n, c, in_h, in_w))
    np.add.at(out.transpose(2, 0, 1, 3), y0, (cols * (1.0 - fy)[None, None, :, None]).transpose(2, 0, 1, 3))
    np.add.at(out.transpose(2, 0, 1, 3), y1, (cols * fy[None, None, :, None]).transpose(2, 0, 1, 3))
    return out


def avg_pool2(x: Tensor) -> Tensor:
    """Downsample by 2 via the mean of each 2x2 block."""
    x = as_tensor(x)
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"avg_pool2: spatial dims {h}x{w} must be even")
    return x.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))


def center_crop(x: Tensor, size: int) -> Tensor:
    """Crop the central size x size region (no resampling)."""
    x = as_tensor(x)
    h, w = x.shape[2], x.shape[3]
    if size > h or size > w:
        raise ShapeError(f"center_crop: size {size} exceeds input dims {h}x{w}")
    top = (h - size) // 2
    left = (w - size) // 2
    return np.ascontiguousarray(x[:, :, top : top + size, left : left + size])
