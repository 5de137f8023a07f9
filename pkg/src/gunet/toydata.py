"""Synthetic data: toy HDR/LDR pairs for the training demo, and
natural-statistics test images for the spectral study.

The HDR scenes mix smooth gradients, diffuse discs, and small bright
emitters up to 32x the diffuse range; LDR views are gamma tone mappings
with a random gain, clipped to [0, 1]. Everything is deterministic per
seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import Rng
from .tensor_ops import resize_bilinear


@dataclass
class ToyItmSample:
    hdr: np.ndarray   # (1, 3, s, s) linear light, >= 0
    ldr: np.ndarray   # (1, 3, s, s) = clip(gain * hdr^(1/gamma), 0, 1)
    gain: float
    gamma: float


def _smooth_field(rng: Rng, size: int, base_res: int) -> np.ndarray:
    low = rng.normal((1, 1, base_res, base_res))
    f = resize_bilinear(low, size, size)[0, 0]
    f -= f.min()
    peak = f.max()
    return f / peak if peak > 0 else f


def _disc_mask(size: int, cy: float, cx: float, radius: float) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    return ((yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2).astype(np.float64)


def _toy_hdr_scene(rng: Rng, size: int) -> np.ndarray:
    # diffuse base: smooth field plus a linear ramp, kept within ~[0.05, 1]
    base = 0.05 + 0.75 * _smooth_field(rng, size, int(rng.integers(3, 7)))
    gx, gy = rng.uniform(-1, 1), rng.uniform(-1, 1)
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    base = base + 0.2 * (gx * xx + gy * yy) + 0.2
    base = np.clip(base, 0.02, None)

    for _ in range(int(rng.integers(1, 5))):  # diffuse discs
        m = _disc_mask(size, rng.uniform(0, size), rng.uniform(0, size),
                       rng.uniform(size / 16, size / 3))
        base = base * (1 - m) + m * rng.uniform(0.1, 1.0)

    tint = rng.uniform(0.6, 1.0, (3, 1, 1))
    hdr = base[None, :, :] * tint

    for _ in range(int(rng.integers(1, 4))):  # bright emitters, up to 32x diffuse
        m = _disc_mask(size, rng.uniform(0, size), rng.uniform(0, size),
                       rng.uniform(1.5, size / 10))
        colour = rng.uniform(2.0, 32.0) * rng.uniform(0.7, 1.0, (3, 1, 1))
        hdr = hdr * (1 - m[None]) + m[None] * colour
    return hdr[None]  # (1, 3, s, s)


def make_toy_dataset(rng: Rng, count: int, size: int = 64) -> list[ToyItmSample]:
    samples = []
    for i in range(count):
        r = rng.child(i)
        hdr = _toy_hdr_scene(r.child(0), size)
        gamma = float(r.child(1).uniform(1.8, 2.4))
        gain = float(r.child(2).uniform(0.5, 2.0))
        ldr = np.clip(gain * hdr ** (1.0 / gamma), 0.0, 1.0)
        samples.append(ToyItmSample(hdr=hdr, ldr=ldr, gain=gain, gamma=gamma))
    return samples


def make_natural_images(rng: Rng, count: int, size: int = 128) -> list[np.ndarray]:
    """Images with natural-image statistics: multi-octave smooth noise
    (decaying spectrum) plus occlusion edges and discs. Values in [0, 1],
    shape (1, 3, size, size)."""
    images = []
    for i in range(count):
        r = rng.child(i)
        luma = np.zeros((size, size))
        res, amp, k = 2, 1.0, 0
        while res <= size:
            octave = r.child(k).normal((1, 1, res, res))
            luma += amp * resize_bilinear(octave, size, size)[0, 0]
            res, amp, k = res * 2, amp * 0.75, k + 1
        luma += 0.12 * r.child(50).normal((size, size))  # fine grain

        edge_rng = r.child(100)
        for j in range(int(edge_rng.integers(2, 6))):  # occluding shapes
            er = edge_rng.child(j)
            if er.uniform() < 0.5:
                m = _disc_mask(size, er.uniform(0, size), er.uniform(0, size),
                               er.uniform(size / 12, size / 3))
            else:
                yy, xx = np.mgrid[0:size, 0:size]
                nx, ny = er.normal(()), er.normal(())
                off = er.uniform(0.2, 0.8) * size
                m = ((nx * (xx - off) + ny * (yy - off)) > 0).astype(np.float64)
            depth = er.uniform(-0.8, 0.8)
            luma = luma * (1 - 0.7 * m) + m * depth

        luma -= luma.min()
        peak = luma.max()
        if peak > 0:
            luma /= peak
        chroma = 0.15 * r.child(200).normal((2, size, size))
        img = np.stack([
            np.clip(luma + chroma[0], 0, 1),
            np.clip(luma, 0, 1),
            np.clip(luma + chroma[1], 0, 1),
        ])
        images.append(img[None])
    return images
