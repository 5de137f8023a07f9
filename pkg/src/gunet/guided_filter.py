"""Guided image filtering over feature stacks, and guided upsampling.

The filter fits a local linear model of the guidance per channel via ridge
regression over square windows: per window, a = cov(guide, src) / (var(guide)
+ eps) and b = mean(src) - a * mean(guide); a second box pass averages the
per-window coefficients over every window covering a pixel. For upsampling,
the averaged coefficients are computed at low resolution, bilinearly
upsampled, and applied to the high-resolution guide:

    out = a_up * guide_hr + b_up

``radius=None`` means the window covers the full feature-map extent, in
which case the coefficients reduce to global per-channel statistics.

Every function accepts plain arrays or autodiff Nodes; with Nodes the
whole filter is differentiable end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff, tensor_ops
from .autodiff import Node
from .errors import NumericsError, ShapeError

FULL_EXTENT = None  # radius sentinel: window spans the whole feature map


@dataclass(frozen=True)
class GifParams:
    """Window half-width (None = full extent) and ridge regularisation."""

    radius: int | None = FULL_EXTENT
    eps: float = 1e-3

    def __post_init__(self):
        if self.radius is not None and self.radius < 0:
            raise ShapeError(f"GifParams: radius must be >= 0 or None, got {self.radius}")
        if self.eps < 0:
            raise ShapeError(f"GifParams: eps must be >= 0, got {self.eps}")

    def to_json(self):
        return {"radius": "full" if self.radius is None else self.radius, "eps": self.eps}

    @classmethod
    def from_json(cls, d) -> "GifParams":
        r = d["radius"]
        return cls(radius=None if r == "full" else int(r), eps=float(d["eps"]))


@dataclass
class GifCoefficients:
    """Window-averaged linear coefficients, shaped like the low-res input."""

    a_bar: np.ndarray | Node
    b_bar: np.ndarray | Node


def _value(x):
    return x.value if isinstance(x, Node) else x


def _is_node(*xs) -> bool:
    return any(isinstance(x, Node) for x in xs)


def _local_mean(x, radius):
    if isinstance(x, Node):
        return autodiff.spatial_mean(x) if radius is None else autodiff.box_mean(x, radius)
    if radius is None:
        return x.mean(axis=(2, 3), keepdims=True)
    return tensor_ops.box_mean(x, radius)


def _check_zero_variance(var, eps, context):
    if eps > 0:
        return
    bad = np.argwhere(_value(var) <= 0.0)
    if bad.size:
        ch = int(bad[0][1])
        raise NumericsError(
            f"{context}: eps=0 with a zero-variance guidance window in channel {ch}"
        )


def gif_coefficients(guide, src, params: GifParams) -> GifCoefficients:
    """Two-pass guided-filter coefficients; per-channel, border-normalized."""
    gv, sv = _value(guide), _value(src)
    if gv.shape != sv.shape:
        raise ShapeError(
            f"gif_coefficients: guide shape {gv.shape} != source shape {sv.shape}"
        )
    r = params.radius
    mu = _local_mean(guide, r)
    m_src = _local_mean(src, r)
    cov = _local_mean(guide * src, r) - mu * m_src
    var = _local_mean(guide * guide, r) - mu * mu
    _check_zero_variance(var, params.eps, "gif_coefficients")
    a = cov / (var + params.eps)
    b = m_src - a * mu
    if r is None:
        # single global window: the outer average is the identity; broadcast
        # back to the input shape
        ones = np.ones_like(gv)
        return GifCoefficients(a_bar=a * ones, b_bar=b * ones)
    return GifCoefficients(a_bar=_local_mean(a, r), b_bar=_local_mean(b, r))


def guided_upsample(guide_hr, guide_lr, src_lr, params: GifParams):
    """Filter src_lr under guide_lr, upsample the coefficients bilinearly,
    and apply them to the 2x-resolution guide."""
    hv, gv, sv = _value(guide_hr), _value(guide_lr), _value(src_lr)
    if not (hv.shape[1] == gv.shape[1] == sv.shape[1]):
        raise ShapeError(
            "guided_upsample: channel counts differ "
            f"(guide_hr {hv.shape[1]}, guide_lr {gv.shape[1]}, source {sv.shape[1]})"
        )
    if hv.shape[2] != 2 * gv.shape[2] or hv.shape[3] != 2 * gv.shape[3]:
        raise ShapeError(
            f"guided_upsample: high-res dims {hv.shape[2]}x{hv.shape[3]} must be "
            f"2x the low-res dims {gv.shape[2]}x{gv.shape[3]}"
        )
    coeff = gif_coefficients(guide_lr, src_lr, params)
    out_h, out_w = hv.shape[2], hv.shape[3]
    if _is_node(guide_hr, guide_lr, src_lr):
        a_hr = autodiff.resize_bilinear(coeff.a_bar, out_h, out_w)
        b_hr = autodiff.resize_bilinear(coeff.b_bar, out_h, out_w)
    else:
        a_hr = tensor_ops.resize_bilinear(coeff.a_bar, out_h, out_w)
        b_hr = tensor_ops.resize_bilinear(coeff.b_bar, out_h, out_w)
    return a_hr * guide_hr + b_hr


def guided_filter(guide, src, params: GifParams):
    """Same-resolution guided filtering: out = a_bar * guide + b_bar."""
    coeff = gif_coefficients(guide, src, params)
    return coeff.a_bar * guide + coeff.b_bar


def gif_coefficients_naive(guide: np.ndarray, src: np.ndarray,
                           params: GifParams) -> GifCoefficients:
    """Reference coefficients via explicit per-window loops (test oracle).

    O(pixels * radius^2); arrays only, not differentiable.
    """
    guide = np.asarray(guide, dtype=np.float64)
    src = np.asarray(src, dtype=np.float64)
    if guide.shape != src.shape:
        raise ShapeError(
            f"gif_coefficients_naive: guide shape {guide.shape} != source shape {src.shape}"
        )
    n, c, h, w = guide.shape
    if params.radius is None:
        mu = guide.mean(axis=(2, 3), keepdims=True)
        ms = src.mean(axis=(2, 3), keepdims=True)
        var = (guide * guide).mean(axis=(2, 3), keepdims=True) - mu * mu
        cov = (guide * src).mean(axis=(2, 3), keepdims=True) - mu * ms
        _check_zero_variance(var, params.eps, "gif_coefficients_naive")
        a = cov / (var + params.eps)
        b = ms - a * mu
        ones = np.ones_like(guide)
        return GifCoefficients(a_bar=a * ones, b_bar=b * ones)

    r = params.radius
    a = np.zeros_like(guide)
    b = np.zeros_like(guide)
    for bi in range(n):
        for ci in range(c):
            for i in range(h):
                for j in range(w):
                    ys, ye = max(i - r, 0), min(i + r, h - 1) + 1
                    xs, xe = max(j - r, 0), min(j + r, w - 1) + 1
                    gw = guide[bi, ci, ys:ye, xs:xe]
                    sw = src[bi, ci, ys:ye, xs:xe]
                    mu = gw.mean()
                    ms = sw.mean()
                    var = (gw * gw).mean() - mu * mu
                    cov = (gw * sw).mean() - mu * ms
                    if params.eps == 0.0 and var <= 0.0:
                        raise NumericsError(
                            f"gif_coefficients_naive: eps=0 with a zero-variance "
                            f"guidance window in channel {ci}"
                        )
                    a[bi, ci, i, j] = cov / (var + params.eps)
                    b[bi, ci, i, j] = ms - a[bi, ci, i, j] * mu
    a_bar = np.zeros_like(a)
    b_bar = np.zeros_like(b)
    for bi in range(n):
        for ci in range(c):
            for i in range(h):
                for j in range(w):
                    ys, ye = max(i - r, 0), min(i + r, h - 1) + 1
                    xs, xe = max(j - r, 0), min(j + r, w - 1) + 1
                    a_bar[bi, ci, i, j] = a[bi, ci, ys:ye, xs:xe].mean()
                    b_bar[bi, ci, i, j] = b[bi, ci, ys:ye, xs:xe].mean()
    return GifCoefficients(a_bar=a_bar, b_bar=b_bar)
