"""Gradient-check suite covering every differentiable operation.

Each entry compares reverse-mode gradients against central finite
differences on fixed-seed inputs chosen away from subgradient kinks.
Used by the ``gradcheck`` CLI command and the acceptance tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .guided_filter import GifParams, guided_upsample
from .nn import GradCheckReport, gradient_check, loss_l1_cosine, loss_smooth_l1
from .rng import Rng
from .unet import FusionKind, NetworkSpec, build_network


@dataclass
class CheckResult:
    module: str
    op: str
    report: GradCheckReport


def _away_from_zero(x: np.ndarray, margin: float = 1e-3) -> np.ndarray:
    """Push values out of (-margin, margin) so kinks do not corrupt the
    finite-difference comparison."""
    return x + np.sign(x + (x == 0)) * margin


def _sq_mean(y):
    return ad.mean_all(y * y)


def _entries():
    rng = Rng(20240917)

    def r(i, shape, std=1.0):
        return rng.child(i).normal(shape, std)

    yield ("tensor-core", "conv2d", 1e-5,
           lambda x, w, b: _sq_mean(ad.conv2d(x, w, b, stride=1, pad=1)),
           [r(0, (2, 3, 6, 6)), r(1, (4, 3, 3, 3)), r(2, (4,))])
    yield ("tensor-core", "conv2d_stride2", 1e-5,
           lambda x, w, b: _sq_mean(ad.conv2d(x, w, b, stride=2, pad=1)),
           [r(3, (1, 2, 7, 7)), r(4, (3, 2, 3, 3)), r(5, (3,))])
    yield ("tensor-core", "transposed_conv2d", 1e-5,
           lambda x, w, b: _sq_mean(ad.transposed_conv2d(x, w, b, stride=2, pad=1)),
           [r(6, (1, 3, 4, 4)), r(7, (3, 2, 4, 4)), r(8, (2,))])
    yield ("tensor-core", "box_mean", 1e-6,
           lambda x: _sq_mean(ad.box_mean(x, 1)),
           [r(9, (1, 2, 6, 6))])
    yield ("tensor-core", "box_mean_large_radius", 1e-6,
           lambda x: _sq_mean(ad.box_mean(x, 4)),
           [r(10, (1, 1, 5, 5))])
    yield ("tensor-core", "resize_bilinear", 1e-6,
           lambda x: _sq_mean(ad.resize_bilinear(x, 9, 7)),
           [r(11, (1, 2, 4, 4))])
    yield ("tensor-core", "resize_nearest", 1e-6,
           lambda x: _sq_mean(ad.resize_nearest(x)),
           [r(12, (1, 2, 4, 4))])

    yield ("nn-autodiff", "relu", 1e-6,
           lambda x: _sq_mean(ad.relu(x)),
           [_away_from_zero(r(13, (2, 3, 5, 5)))])
    yield ("nn-autodiff", "batchnorm", 1e-5,
           lambda x, g, b: _sq_mean(ad.batchnorm(x, g, b)),
           [r(14, (1, 2, 4, 4)), 1.0 + 0.2 * r(15, (2,)), 0.2 * r(16, (2,))])
    yield ("nn-autodiff", "channel_scale_shift", 1e-6,
           lambda x, g, b: _sq_mean(ad.channel_scale_shift(x, g, b)),
           [r(17, (2, 3, 4, 4)), r(18, (3,)), r(19, (3,))])
    tgt = np.abs(r(21, (1, 3, 4, 4))) + 0.5
    yield ("nn-autodiff", "loss_l1_cosine", 1e-5,
           lambda p: loss_l1_cosine(p, tgt),
           [np.abs(r(20, (1, 3, 4, 4))) + 0.5])
    tgt2 = r(23, (1, 2, 4, 4))
    yield ("nn-autodiff", "loss_smooth_l1", 1e-5,
           lambda p: loss_smooth_l1(p, tgt2),
           [tgt2 + _away_from_zero(r(22, (1, 2, 4, 4)))])

    gif_small = GifParams(radius=1, eps=0.01)
    yield ("guided-filter", "guided_upsample", 1e-3,
           lambda xh, yl, zl: _sq_mean(guided_upsample(xh, yl, zl, gif_small)),
           [r(24, (1, 2, 8, 8)), r(25, (1, 2, 4, 4)), r(26, (1, 2, 4, 4))])
    gif_full = GifParams(radius=None, eps=0.01)
    yield ("guided-filter", "guided_upsample_full_window", 1e-3,
           lambda xh, yl, zl: _sq_mean(guided_upsample(xh, yl, zl, gif_full)),
           [r(27, (1, 2, 8, 8)), r(28, (1, 2, 4, 4)), r(29, (1, 2, 4, 4))])

    # full tiny network: gradient w.r.t. the input image and, via node
    # swap-in, a bottleneck conv weight and a norm gain
    for arch in ("gunet", "tc", "nn", "bi", "ae"):
        spec = NetworkSpec(fusion=FusionKind.from_arch(arch), levels=(2, 3),
                           bottleneck_blocks=1, seed=77)
        net = build_network(spec)
        unit = net.root.child.child.blocks[0].unit1

        def full_net(x, w, gamma, net=net, unit=unit):
            saved_w, saved_g = unit.w, unit.bn.gamma
            unit.w, unit.bn.gamma = w, gamma
            try:
                out = net.forward_node(x)
            finally:
                unit.w, unit.bn.gamma = saved_w, saved_g
            return _sq_mean(out)

        yield ("unet-factory", f"full_network_{arch}", 1e-3, full_net,
               [rng.child(30).uniform(0, 1, (1, 3, 16, 16)),
                unit.w.value.copy(), unit.bn.gamma.value.copy()])


def gradient_suite(module: str | None = None, n_coords: int = 64) -> list[CheckResult]:
    results = []
    rng = Rng(5150)
    for i, (mod, op, tol, fn, inputs) in enumerate(_entries()):
        if module is not None and mod != module:
            continue
        report = gradient_check(fn, inputs, tol=tol, rng=rng.child(i), n_coords=n_coords)
        results.append(CheckResult(module=mod, op=op, report=report))
    return results


def suite_modules() -> list[str]:
    return ["tensor-core", "nn-autodiff", "guided-filter", "unet-factory"]
