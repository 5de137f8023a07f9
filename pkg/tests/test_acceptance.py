"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL
line (collected in the terminal summary) with its runtime."""

import time

import numpy as np

from gunet import autodiff as ad
from gunet.backends import get_backend
from gunet.checks import gradient_suite
from gunet.cli import main as cli_main
from gunet.fourier import dft2d
from gunet.guided_filter import GifParams, gif_coefficients, gif_coefficients_naive, guided_upsample
from gunet.imageio import save_image
from gunet.rng import Rng
from gunet.spectral import model_average_analysis, radial_profile, spectrum_magnitude
from gunet.tensor_ops import avg_pool2, window_counts
from gunet.toydata import make_natural_images, make_toy_dataset
from gunet.train import train_toy
from gunet.unet import FusionKind, NetworkSpec, build_network, param_count

from conftest import (box_mean_oracle, conv2d_oracle, dft2d_oracle, record_acceptance,
                      transposed_conv2d_oracle)


def _report(num, name, ok, started, budget_s, detail=""):
    elapsed = time.time() - started
    line = (f"criterion {num} [{name}]: {'PASS' if ok else 'FAIL'} "
            f"({elapsed:.1f}s / budget {budget_s:.0f}s){' - ' + detail if detail else ''}")
    print(line)
    record_acceptance(line)
    assert ok, line
    assert elapsed < budget_s, f"criterion {num} exceeded runtime budget: {line}"


def test_criterion_1_oracle_equivalence():
    t0 = time.time()
    rng = Rng(101)
    kern = get_backend("auto")
    worst = 0.0

    for case in range(100):  # conv2d
        r = rng.child(case)
        n, ci, co = int(r.integers(1, 3)), int(r.integers(1, 4)), int(r.integers(1, 4))
        kh, kw = int(r.integers(1, 4)), int(r.integers(1, 4))
        h, w = int(r.integers(kh, kh + 5)), int(r.integers(kw, kw + 5))
        stride, pad = int(r.integers(1, 3)), int(r.integers(0, 2))
        x, wt = r.normal((n, ci, h, w)), r.child(1).normal((co, ci, kh, kw))
        err = np.abs(kern.conv2d_forward(x, wt, stride, pad)
                     - conv2d_oracle(x, wt, None, stride, pad)).max()
        worst = max(worst, err)

    for case in range(100):  # transposed_conv2d
        r = rng.child(1000 + case)
        n, ci, co = int(r.integers(1, 3)), int(r.integers(1, 3)), int(r.integers(1, 3))
        kh, kw = int(r.integers(2, 5)), int(r.integers(2, 5))
        stride = int(r.integers(1, 3))
        pad = int(r.integers(0, min(kh, kw) // 2 + 1))
        h, w = int(r.integers(2, 6)), int(r.integers(2, 6))
        x, wt = r.normal((n, ci, h, w)), r.child(1).normal((ci, co, kh, kw))
        got = kern.conv2d_grad_input(x, wt, stride, pad,
                                     (h - 1) * stride - 2 * pad + kh,
                                     (w - 1) * stride - 2 * pad + kw)
        err = np.abs(got - transposed_conv2d_oracle(x, wt, None, stride, pad)).max()
        worst = max(worst, err)

    for case in range(100):  # box_mean
        r = rng.child(2000 + case)
        n, c = int(r.integers(1, 3)), int(r.integers(1, 3))
        h, w = int(r.integers(1, 9)), int(r.integers(1, 9))
        radius = int(r.integers(0, 5))
        x = r.normal((n, c, h, w))
        got = kern.box_sum(x, radius) / window_counts(h, w, radius)
        worst = max(worst, np.abs(got - box_mean_oracle(x, radius)).max())

    for case in range(100):  # gif_coefficients
        r = rng.child(3000 + case)
        n, c = int(r.integers(1, 3)), int(r.integers(1, 3))
        h, w = int(r.integers(2, 9)), int(r.integers(2, 9))
        p = GifParams(radius=int(r.integers(0, 4)), eps=float(r.uniform(1e-4, 0.1)))
        guide, src = r.normal((n, c, h, w)), r.child(1).normal((n, c, h, w))
        fast = gif_coefficients(guide, src, p)
        naive = gif_coefficients_naive(guide, src, p)
        worst = max(worst, np.abs(fast.a_bar - naive.a_bar).max(),
                    np.abs(fast.b_bar - naive.b_bar).max())

    worst_dft = 0.0
    for case in range(100):  # dft2d
        r = rng.child(4000 + case)
        h = int(2 ** r.integers(1, 5))
        w = int(2 ** r.integers(1, 5))
        plane = r.normal((h, w))
        z = dft2d(plane)
        worst_dft = max(worst_dft, np.abs((z.re + 1j * z.im) - dft2d_oracle(plane)).max())

    ok = worst <= 1e-10 and worst_dft <= 1e-9
    _report(1, "oracle equivalence", ok, t0, 120,
            f"max abs err {worst:.2e} (ops), {worst_dft:.2e} (dft)")


def test_criterion_2_gradient_suite():
    t0 = time.time()
    results = gradient_suite()
    failed = [r for r in results if not r.report.passed]
    worst = max(r.report.max_rel_error for r in results)
    _report(2, "gradient suite", not failed, t0, 300,
            f"{len(results)} checks, worst rel err {worst:.2e}")


def test_criterion_3_self_guidance_identity():
    t0 = time.time()
    crop = make_natural_images(Rng(33), 1, size=64)[0]  # non-constant natural crop
    low = avg_pool2(crop)
    q = guided_upsample(crop, low, low, GifParams(radius=None, eps=1e-8))
    dev = np.abs(q - crop).max()
    _report(3, "self-guidance identity", dev <= 1e-3, t0, 60, f"max |q - x| = {dev:.2e}")


def test_criterion_4_parameter_count_claim(capsys):
    t0 = time.time()
    counts = {}
    for arch in ("gunet", "nn", "bi", "tc", "ae"):
        spec = NetworkSpec(fusion=FusionKind.from_arch(arch))
        counts[arch] = param_count(build_network(spec))
    frozen = {"gunet": 1_695_283, "nn": 1_935_603, "bi": 1_935_603,
              "tc": 2_087_923, "ae": 2_044_163}
    for arch, count in counts.items():
        print(f"  param tally {arch}: {count}")
    ok = (counts["gunet"] < counts["bi"] == counts["nn"] < counts["tc"]
          and counts == frozen)
    _report(4, "parameter-count claim", ok, t0, 60,
            f"gunet {counts['gunet']} < nn/bi {counts['nn']} < tc {counts['tc']}")


def test_criterion_5_spectral_bias_reproduction():
    t0 = time.time()
    inputs = make_natural_images(Rng(11), 3, size=128)
    reports = {}
    for arch in ("tc", "nn", "gunet"):
        spec = NetworkSpec(fusion=FusionKind.from_arch(arch), seed=0)
        reports[arch] = model_average_analysis(spec, inputs, samples=10, seed=123)

    dist = {a: reports[a].stats["spectral_distance"] for a in reports}
    nyq = {a: reports[a].stats["nyquist_peak_ratio"] for a in reports}
    input_profile = radial_profile(reports["gunet"].input_spectrum)
    q = len(input_profile) * 3 // 4
    tail_in = input_profile[q:].mean()
    tail = {a: reports[a].stats["radial_profile"][q:].mean() for a in reports}

    ok_a = dist["gunet"] < dist["tc"] and dist["gunet"] < dist["nn"]
    ok_b = nyq["tc"] >= 2.0 * nyq["gunet"]
    ok_c = tail["nn"] < tail_in and 0.5 * tail_in <= tail["gunet"] <= 2.0 * tail_in
    detail = (f"dist g/tc/nn {dist['gunet']:.3f}/{dist['tc']:.3f}/{dist['nn']:.3f}; "
              f"nyq tc/g {nyq['tc']:.1f}/{nyq['gunet']:.2f}; "
              f"tail nn/g/in {tail['nn']:.2f}/{tail['gunet']:.2f}/{tail_in:.2f}")
    _report(5, "spectral-bias reproduction", ok_a and ok_b and ok_c, t0, 600, detail)


def test_criterion_6_toy_itm_training():
    t0 = time.time()
    spec = NetworkSpec(fusion=FusionKind.from_arch("gunet"), seed=0)
    dataset = make_toy_dataset(Rng(0, spawn_key=(0xDA7A,)), 32, size=64)
    result = train_toy(spec, dataset, lr=3e-4, batch=4, iters=500,
                       loss_kind="l1cos", lam=5.0, seed=0)
    losses = result.losses
    head = losses[:50].mean()
    tail = losses[-50:].mean()
    ok = np.isfinite(losses).all() and tail <= 0.5 * head
    _report(6, "toy ITM training", ok, t0, 900,
            f"first-50 mean {head:.4g} -> last-50 mean {tail:.4g} (ratio {tail / head:.3f})")


def test_criterion_7_manifest_replay_determinism(tmp_path):
    t0 = time.time()
    inputs_dir = tmp_path / "inputs"
    inputs_dir.mkdir()
    for i, img in enumerate(make_natural_images(Rng(21), 2, size=64)):
        save_image(img, inputs_dir / f"in_{i}.ppm")

    ok = True
    a, b = tmp_path / "spec_a", tmp_path / "spec_b"
    # parallel sweep on purpose: worker count must not affect the bits
    assert cli_main(["spectra", "--arch", "gunet", "--samples", "4", "--workers", "4",
                     "--inputs", str(inputs_dir), "--size", "64", "--seed", "9",
                     "--levels", "8,12", "--out", str(a)]) == 0
    assert cli_main(["replay", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in ("stats.json", "spectrum_output.pfm", "spectrum_input.pfm",
                 "radial_profile.csv", "output_mean.ppm", "spectrum_output_view.pgm"):
        ok = ok and (a / name).read_bytes() == (b / name).read_bytes()

    ta, tb = tmp_path / "train_a", tmp_path / "train_b"
    assert cli_main(["train-toy", "--levels", "4,6", "--iters", "5", "--count", "4",
                     "--batch", "2", "--size", "16", "--seed", "3", "--out", str(ta)]) == 0
    assert cli_main(["replay", str(ta / "manifest.json"), "--out", str(tb)]) == 0
    ok = ok and (ta / "checkpoint.bin").read_bytes() == (tb / "checkpoint.bin").read_bytes()
    ok = ok and (ta / "loss.csv").read_bytes() == (tb / "loss.csv").read_bytes()

    _report(7, "manifest replay determinism", ok, t0, 300,
            "spectra (4 workers) + train-toy replays bit-identical")


def test_criterion_8_fourier_unit_properties():
    t0 = time.time()
    rng = Rng(88)
    plane = rng.normal((32, 32))
    energy_spatial = (plane ** 2).sum() * plane.size
    energy_freq = (dft2d(plane).magnitude() ** 2).sum()
    parseval_rel = abs(energy_spatial - energy_freq) / energy_spatial

    idx = np.indices((16, 16)).sum(axis=0)
    cb = np.where(idx % 2 == 0, 1.0, -1.0)
    mag = dft2d(cb).magnitude()
    hot = [tuple(int(v) for v in uv) for uv in np.argwhere(mag > 1e-9)]
    single_nyquist = hot == [(8, 8)]

    impulse = np.zeros((16, 16))
    impulse[0, 0] = 1.0
    flat = np.abs(dft2d(impulse).magnitude() - 1.0).max() <= 1e-12

    ok = parseval_rel <= 1e-9 and single_nyquist and flat
    _report(8, "fourier unit properties", ok, t0, 60,
            f"parseval rel {parseval_rel:.2e}; checkerboard bin {hot[0]}")


def test_spectrum_magnitude_checkerboard_is_brightest_centre():
    # supporting check: the 2-pixel checkerboard maps to the centred Nyquist bin
    idx = np.indices((32, 32)).sum(axis=0)
    img = np.where(idx % 2 == 0, 1.0, 0.0)[None, None].repeat(3, axis=1)
    spec = spectrum_magnitude(img)
    centre = spec[16, 16]
    spec_wo = spec.copy()
    spec_wo[16, 16] = 0
    spec_wo[0, 0] = 0  # DC of the 0/1 checkerboard
    assert centre >= spec_wo.max()
