"""Fourier-domain bias analysis of freshly initialized networks.

Many parameter samples of one architecture are forwarded over a set of
images; the magnitude spectra of the outputs are averaged and reduced to
scalar bias statistics. In the raw DFT layout the DC term sits at the
corners, so the 2-pixel-period checkerboard frequency lands on the centre
pixel of the plane; planes are kept in that layout, which is also how they
are displayed.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ShapeError
from .fourier import dft2d
from .rng import Rng
from .unet import NetworkSpec, build_network, forward


def _require_square_pow2(h: int, w: int, context: str):
    if h != w:
        raise ShapeError(f"{context}: plane must be square, got {h}x{w}")
    if h < 2 or (h & (h - 1)):
        raise ShapeError(f"{context}: size {h} must be a power of two (centre-crop first)")


def spectrum_magnitude(image: np.ndarray) -> np.ndarray:
    """Per-channel DFT magnitude averaged over channels, raw DFT layout."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 4 or image.shape[0] != 1:
        raise ShapeError(f"spectrum_magnitude: expected a (1, c, h, w) image, got {image.shape}")
    _require_square_pow2(image.shape[2], image.shape[3], "spectrum_magnitude")
    acc = np.zeros(image.shape[2:])
    for c in range(image.shape[1]):
        acc += dft2d(image[0, c]).magnitude()
    return acc / image.shape[1]


def spectral_distance(output_spec: np.ndarray, input_spec: np.ndarray) -> float:
    """Mean absolute difference of log(1 + magnitude) between two planes."""
    if output_spec.shape != input_spec.shape:
        raise ShapeError(
            f"spectral_distance: plane shapes differ {output_spec.shape} vs {input_spec.shape}"
        )
    return float(np.abs(np.log1p(output_spec) - np.log1p(input_spec)).mean())


def nyquist_peak_ratio(spec: np.ndarray) -> float:
    """Centre (Nyquist) bin over the median of its 11x11 neighbourhood.

    A strong 2-pixel checkerboard shows up as a ratio far above 1.
    """
    n = spec.shape[0]
    _require_square_pow2(n, spec.shape[1], "nyquist_peak_ratio")
    cy = cx = n // 2
    half = 5
    ys = slice(max(cy - half, 0), min(cy + half + 1, n))
    xs = slice(max(cx - half, 0), min(cx + half + 1, n))
    patch = spec[ys, xs].copy()
    patch[cy - ys.start, cx - xs.start] = np.nan
    med = float(np.nanmedian(patch))
    centre = float(spec[cy, cx])
    if med == 0.0:
        return 0.0 if centre == 0.0 else float("inf")
    return centre / med


@lru_cache(maxsize=16)
def _radial_bins(n: int) -> tuple[np.ndarray, np.ndarray]:
    # wrapped frequency distance from DC (which sits at the corners)
    f = np.minimum(np.arange(n), n - np.arange(n)).astype(np.float64)
    r = np.floor(np.hypot(f[:, None], f[None, :])).astype(np.intp)
    n_bins = n // 2
    r = np.minimum(r, n_bins)  # overflow bin, dropped below
    counts = np.bincount(r.ravel(), minlength=n_bins + 1)
    return r, counts


def radial_profile(spec: np.ndarray) -> np.ndarray:
    """Mean magnitude per integer-radius annulus about DC; length n // 2."""
    n = spec.shape[0]
    _require_square_pow2(n, spec.shape[1], "radial_profile")
    bins, counts = _radial_bins(n)
    sums = np.bincount(bins.ravel(), weights=spec.ravel(), minlength=n // 2 + 1)
    return (sums / counts)[: n // 2]


@dataclass
class SpectrumReport:
    arch: str
    input_spectrum: np.ndarray
    mean_output_spectrum: np.ndarray
    mean_output_image: np.ndarray
    n_model_samples: int
    n_inputs: int
    stats: dict = field(default_factory=dict)
    avg_mode: str = "mag"
    normalize: str = "moment_match"
    seed: int = 0

    def stats_json(self) -> dict:
        return {
            "arch": self.arch,
            "n_model_samples": self.n_model_samples,
            "n_inputs": self.n_inputs,
            "avg_mode": self.avg_mode,
            "normalize": self.normalize,
            "seed": self.seed,
            "spectral_distance": self.stats["spectral_distance"],
            "nyquist_peak_ratio": self.stats["nyquist_peak_ratio"],
        }


def _match_moments(out: np.ndarray, ref_mean: np.ndarray, ref_std: np.ndarray) -> np.ndarray:
    """Rescale each output channel to the reference per-channel mean/std."""
    mean = out.mean(axis=(0, 2, 3), keepdims=True)
    std = out.std(axis=(0, 2, 3), keepdims=True)
    scale = np.where(std < 1e-12, 0.0, ref_std / np.maximum(std, 1e-12))
    return (out - mean) * scale + ref_mean


def _sample_pass(spec: NetworkSpec, inputs, moments, base_rng: Rng, s: int, complex_mode: bool):
    """Forward one freshly initialized network over every input."""
    net = build_network(spec, rng=base_rng.child(s))
    mag_acc = np.zeros(inputs[0].shape[2:])
    out_acc = np.zeros_like(inputs[0])
    complex_per_input = None
    if complex_mode:
        c = inputs[0].shape[1]
        complex_per_input = np.zeros((len(inputs), c) + inputs[0].shape[2:], dtype=np.complex128)
    for i, img in enumerate(inputs):
        out = forward(net, img)
        out_acc += out
        if moments is not None:
            out = _match_moments(out, *moments[i])
        if complex_mode:
            for ch in range(out.shape[1]):
                z = dft2d(out[0, ch])
                complex_per_input[i, ch] = z.re + 1j * z.im
                mag_acc += np.hypot(z.re, z.im) / out.shape[1]
        else:
            mag_acc += spectrum_magnitude(out)
    return mag_acc / len(inputs), out_acc / len(inputs), complex_per_input


def model_average_analysis(spec: NetworkSpec, inputs, samples: int = 50, seed: int = 0,
                           avg: str = "mag", normalize: str = "moment_match",
                           workers: int | None = None) -> SpectrumReport:
    """Average output spectra over `samples` fresh initializations of one
    architecture (and over the input set), with derived bias statistics.

    avg="mag" averages magnitude spectra (default); avg="complex" averages
    the complex spectra over model samples before taking magnitudes. The
    two coincide exactly for samples=1. Scalar stats are always computed
    from per-sample magnitude spectra and averaged over samples.

    A freshly initialized network's output gain is arbitrary, so with
    normalize="moment_match" (default) each output is rescaled to its
    input's global mean/std before its spectrum is taken; that compares
    spectral shape at matched energy, which is what the exposure-adjusted
    visual comparison does. normalize="none" uses raw outputs. The spatial
    mean_output_image is always raw.
    """
    if not inputs:
        raise ShapeError("model_average_analysis: need at least one input image")
    if samples < 1:
        raise ShapeError(f"model_average_analysis: samples must be >= 1, got {samples}")
    if avg not in ("mag", "complex"):
        raise ValueError(f"model_average_analysis: avg must be 'mag' or 'complex', got {avg!r}")
    if normalize not in ("moment_match", "none"):
        raise ValueError(
            f"model_average_analysis: normalize must be 'moment_match' or 'none', got {normalize!r}"
        )
    inputs = [np.asarray(x, dtype=np.float64) for x in inputs]
    shape = inputs[0].shape
    for i, x in enumerate(inputs):
        if x.shape != shape:
            raise ShapeError(f"model_average_analysis: input {i} shape {x.shape} != {shape}")
    _require_square_pow2(shape[2], shape[3], "model_average_analysis")
    if shape[2] < 32:
        raise ShapeError(f"model_average_analysis: inputs must be at least 32x32, got {shape[2]}")

    input_spectrum = np.zeros(shape[2:])
    for x in inputs:
        input_spectrum += spectrum_magnitude(x)
    input_spectrum /= len(inputs)

    moments = None
    if normalize == "moment_match":
        moments = [
            (x.mean(axis=(0, 2, 3), keepdims=True), x.std(axis=(0, 2, 3), keepdims=True))
            for x in inputs
        ]

    base_rng = Rng(seed)
    complex_mode = avg == "complex"
    if workers is None:
        workers = min(4, os.cpu_count() or 1, samples)

    if workers > 1 and samples > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda s: _sample_pass(spec, inputs, moments, base_rng, s, complex_mode),
                         range(samples))
            )
    else:
        results = [_sample_pass(spec, inputs, moments, base_rng, s, complex_mode)
                   for s in range(samples)]

    # fixed-order reduction keeps the sweep bit-identical for any worker count
    mean_out_image = np.zeros_like(inputs[0])
    dists = np.zeros(samples)
    nyqs = np.zeros(samples)
    mag_mean = np.zeros(shape[2:])
    complex_sum = None
    for s, (mag_s, out_s, cplx_s) in enumerate(results):
        mean_out_image += out_s
        dists[s] = spectral_distance(mag_s, input_spectrum)
        nyqs[s] = nyquist_peak_ratio(mag_s)
        mag_mean += mag_s
        if complex_mode:
            complex_sum = cplx_s if complex_sum is None else complex_sum + cplx_s
    mean_out_image /= samples
    mag_mean /= samples

    if complex_mode:
        mean_output_spectrum = np.abs(complex_sum / samples).mean(axis=(0, 1))
    else:
        mean_output_spectrum = mag_mean

    stats = {
        "spectral_distance": float(dists.mean()),
        "nyquist_peak_ratio": float(nyqs.mean()),
        "radial_profile": radial_profile(mean_output_spectrum),
    }
    return SpectrumReport(
        arch=spec.fusion.label,
        input_spectrum=input_spectrum,
        mean_output_spectrum=mean_output_spectrum,
        mean_output_image=mean_out_image,
        n_model_samples=samples,
        n_inputs=len(inputs),
        stats=stats,
        avg_mode=avg,
        normalize=normalize,
        seed=seed,
    )


def spectrum_view(plane: np.ndarray, exposure_ev: float = 0.0) -> np.ndarray:
    """log(1 + M) normalized to [0, 1], exposed by 2^ev, clamped."""
    v = np.log1p(np.maximum(plane, 0.0))
    peak = v.max()
    if peak > 0:
        v = v / peak
    return np.clip(v * (2.0 ** exposure_ev), 0.0, 1.0)
