"""Kernel backend selection.

Two interchangeable implementations of the hot kernels exist: compiled
Cython loops (gunet.backends._native) and vectorized NumPy
(gunet.backends.numpy_kernels). They agree to float64 round-off; the test
suite checks both against naive oracles and benchmarks/bench_kernels.py
compares their speed.

The default composes the faster implementation per kernel as measured on
the shapes the networks actually run: the convolution family rides
NumPy's BLAS-backed tensordot, while the box sums (integral images, the
guided filter's engine) come from the compiled extension when it is
built. ``GUNET_KERNELS=numpy|cython`` forces a uniform backend instead
(useful for benchmarking and for replaying a manifest recorded under a
specific backend).
"""

from __future__ import annotations

import os
from types import SimpleNamespace

from . import numpy_kernels

try:
    from . import _native
    _HAVE_NATIVE = True
except ImportError:
    _native = None
    _HAVE_NATIVE = False


def _compose_auto():
    box = _native if _HAVE_NATIVE else numpy_kernels
    return SimpleNamespace(
        NAME="auto" if _HAVE_NATIVE else "numpy",
        conv2d_forward=numpy_kernels.conv2d_forward,
        conv2d_grad_input=numpy_kernels.conv2d_grad_input,
        conv2d_grad_weight=numpy_kernels.conv2d_grad_weight,
        box_sum=box.box_sum,
    )


_FORCED = os.environ.get("GUNET_KERNELS", "").strip().lower()

if _FORCED == "numpy":
    kernels = numpy_kernels
elif _FORCED == "cython":
    if not _HAVE_NATIVE:
        raise ImportError("GUNET_KERNELS=cython but the compiled extension is not built")
    kernels = _native
elif _FORCED in ("", "auto"):
    kernels = _compose_auto()
else:
    raise ImportError(f"GUNET_KERNELS={_FORCED!r}: expected 'numpy', 'cython', or 'auto'")


def backend_name() -> str:
    return kernels.NAME


def available_backends() -> list[str]:
    names = ["numpy"]
    if _HAVE_NATIVE:
        names.append("cython")
    return names


def get_backend(name: str):
    if name == "numpy":
        return numpy_kernels
    if name == "cython":
        if not _HAVE_NATIVE:
            raise ImportError("compiled kernel extension is not built")
        return _native
    if name == "auto":
        return _compose_auto()
    raise ValueError(f"unknown kernel backend {name!r}")
