"""2-D discrete Fourier transform via an iterative radix-2 row-column FFT.

Only power-of-two sizes are supported (callers centre-crop); the transform
is the unnormalized forward DFT and no inverse is provided. Results are
carried as a ComplexPlane so downstream code never depends on NumPy's
complex dtype layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ShapeError


@dataclass
class ComplexPlane:
    """Real/imaginary parts of an (h, w) spectrum."""

    re: np.ndarray
    im: np.ndarray

    @property
    def shape(self):
        return self.re.shape

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.re, self.im)

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "ComplexPlane":
        return cls(np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag))


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=32)
def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    rev = np.zeros(n, dtype=np.intp)
    for i in range(1, n):
        rev[i] = (rev[i >> 1] >> 1) | ((i & 1) << (bits - 1))
    return rev


def _fft_rows(a: np.ndarray) -> np.ndarray:
    """Radix-2 decimation-in-time FFT along the last axis (power-of-two length)."""
    n = a.shape[-1]
    if n == 1:
        return a.astype(np.complex128, copy=True)
    out = a[..., _bit_reversal(n)].astype(np.complex128)
    half = 1
    while half < n:
        tw = np.exp((-1j * np.pi / half) * np.arange(half))
        blocks = out.reshape(out.shape[:-1] + (n // (2 * half), 2, half))
        even = blocks[..., 0, :]
        odd = blocks[..., 1, :] * tw
        out = np.concatenate([even + odd, even - odd], axis=-1).reshape(out.shape)
        half *= 2
    return out


def dft2d(plane: np.ndarray) -> ComplexPlane:
    """Unnormalized forward 2-D DFT of a real (h, w) slice.

    F[u, v] = sum_{y, x} plane[y, x] * exp(-2i*pi*(u*y/h + v*x/w))
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ShapeError(f"dft2d: expected a 2-D plane, got shape {plane.shape}")
    h, w = plane.shape
    if not (_is_pow2(h) and _is_pow2(w)):
        raise ShapeError(
            f"dft2d: dims {h}x{w} must be powers of two; centre-crop or pad the input first"
        )
    z = _fft_rows(plane.astype(np.complex128))
    z = _fft_rows(z.T).T
    return ComplexPlane.from_complex(np.ascontiguousarray(z))
