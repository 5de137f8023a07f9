"""Command-line workbench.

Subcommands: spectra (initialization-bias study), forward (run one image
through a fresh or checkpointed network), gif (standalone guided
filtering/upsampling), train-toy (toy inverse tone mapping), gradcheck,
params (parameter tallies), make-inputs (synthetic natural images), and
replay (re-run any manifest).

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import gradient_suite, suite_modules
from .errors import GunetError, ImageFormatError, NumericsError, ShapeError
from .guided_filter import GifParams, guided_filter, guided_upsample
from .imageio import load_image, save_image, save_plane_pfm
from .manifest import RunManifest
from .rng import Rng
from .spectral import model_average_analysis, spectrum_view
from .tensor_ops import avg_pool2, center_crop
from .toydata import make_natural_images, make_toy_dataset
from .train import load_checkpoint, train_toy
from .unet import ARCH_LABELS, FusionKind, NetworkSpec, build_network, forward, param_count

ARCHES = ("tc", "nn", "bi", "gunet", "ae")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _parse_radius(text: str):
    if text.lower() == "full":
        return None
    try:
        value = int(text)
    except ValueError:
        raise UsageError(f"--radius must be an integer or 'full', got {text!r}") from None
    if value < 0:
        raise UsageError("--radius must be >= 0")
    return value


def _spec_from_opts(opts) -> NetworkSpec:
    gif = GifParams(radius=_parse_radius(str(opts["radius"])), eps=float(opts["eps"]))
    fusion = FusionKind.from_arch(opts["arch"], gif if opts["arch"] == "gunet" else None)
    levels = tuple(int(c) for c in str(opts["levels"]).split(","))
    return NetworkSpec(fusion=fusion, levels=levels, seed=int(opts["seed"]))


def _load_inputs(directory, size: int):
    directory = Path(directory)
    paths = sorted(p for p in directory.iterdir()
                   if p.suffix.lower() in (".ppm", ".pgm", ".pfm"))
    if not paths:
        raise ImageFormatError(f"{directory}: no .ppm/.pgm/.pfm images found")
    images = []
    for p in paths:
        img = load_image(p)
        if img.shape[1] == 1:
            img = np.repeat(img, 3, axis=1)
        if img.shape[2] < size or img.shape[3] < size:
            raise ImageFormatError(
                f"{p}: image {img.shape[2]}x{img.shape[3]} smaller than crop size {size}"
            )
        images.append(center_crop(img, size))
    return images, [str(p) for p in paths]


def _write_manifest(out_dir: Path, command: str, opts: dict, spec: NetworkSpec | None):
    RunManifest(
        command=command,
        options=opts,
        seed=int(opts["seed"]) if "seed" in opts else None,
        spec=spec.to_json() if spec is not None else None,
    ).write(out_dir / "manifest.json" if out_dir.is_dir() else out_dir)


def run_spectra(opts: dict) -> int:
    out_dir = Path(opts["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = _spec_from_opts(opts)
    inputs, input_paths = _load_inputs(opts["inputs"], int(opts["size"]))
    report = model_average_analysis(
        spec, inputs,
        samples=int(opts["samples"]),
        seed=int(opts["seed"]),
        avg=opts["avg"],
        normalize=opts["normalize"],
        workers=opts.get("workers"),
    )
    ev = float(opts["exposure"])
    save_plane_pfm(report.mean_output_spectrum, out_dir / "spectrum_output.pfm")
    save_plane_pfm(report.input_spectrum, out_dir / "spectrum_input.pfm")
    save_image(spectrum_view(report.mean_output_spectrum, ev)[None, None],
               out_dir / "spectrum_output_view.pgm")
    save_image(spectrum_view(report.input_spectrum, ev)[None, None],
               out_dir / "spectrum_input_view.pgm")
    mean_img = report.mean_output_image
    lo, hi = float(mean_img.min()), float(mean_img.max())
    view = (mean_img - lo) / (hi - lo) if hi > lo else np.zeros_like(mean_img)
    save_image(view, out_dir / "output_mean.ppm")

    stats = report.stats_json()
    stats["inputs"] = input_paths
    stats["output_mean_range"] = [lo, hi]
    with open(out_dir / "stats.json", "w") as f:
        json.dump(stats, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out_dir / "radial_profile.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["radius", "mean_magnitude"])
        for r, v in enumerate(report.stats["radial_profile"]):
            writer.writerow([r, f"{v:.17g}"])
    _write_manifest(out_dir, "spectra", opts, spec)
    print(f"{report.arch}: spectral_distance={stats['spectral_distance']:.6g} "
          f"nyquist_peak_ratio={stats['nyquist_peak_ratio']:.6g}")
    print(f"report written to {out_dir}")
    return 0


def run_forward(opts: dict) -> int:
    image = load_image(opts["image"])
    if image.shape[1] == 1:
        image = np.repeat(image, 3, axis=1)
    if opts.get("checkpoint"):
        net, _ = load_checkpoint(opts["checkpoint"])
        spec = net.spec
    else:
        spec = _spec_from_opts(opts)
        net = build_network(spec)
    out = forward(net, image)
    out_path = Path(opts["out"])
    save_image(out if out_path.suffix == ".pfm" else np.clip(out, 0.0, 1.0), out_path)
    _write_manifest(out_path.with_suffix(out_path.suffix + ".manifest.json"),
                    "forward", opts, spec)
    print(f"wrote {out_path} (range [{out.min():.4g}, {out.max():.4g}])")
    return 0


def run_gif(opts: dict) -> int:
    src = load_image(opts["input"])
    guide = load_image(opts["guide"])
    if src.shape[1] != guide.shape[1]:
        raise ShapeError(
            f"gif: input has {src.shape[1]} channels but guide has {guide.shape[1]}"
        )
    params = GifParams(radius=_parse_radius(str(opts["radius"])), eps=float(opts["eps"]))
    if guide.shape[2:] == src.shape[2:]:
        out = guided_filter(guide, src, params)
    elif guide.shape[2] == 2 * src.shape[2] and guide.shape[3] == 2 * src.shape[3]:
        out = guided_upsample(guide, avg_pool2(guide), src, params)
    else:
        raise ShapeError(
            f"gif: guide dims {guide.shape[2:]} must equal or be exactly 2x "
            f"the input dims {src.shape[2:]}"
        )
    out_path = Path(opts["out"])
    save_image(out if out_path.suffix == ".pfm" else np.clip(out, 0.0, 1.0), out_path)
    _write_manifest(out_path.with_suffix(out_path.suffix + ".manifest.json"),
                    "gif", opts, None)
    print(f"wrote {out_path}")
    return 0


def run_train_toy(opts: dict) -> int:
    out_dir = Path(opts["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = _spec_from_opts(opts)
    dataset = make_toy_dataset(Rng(int(opts["seed"]), spawn_key=(0xDA7A,)),
                               int(opts["count"]), int(opts["size"]))
    result = train_toy(
        spec, dataset,
        lr=float(opts["lr"]),
        batch=int(opts["batch"]),
        iters=int(opts["iters"]),
        loss_kind=opts["loss"],
        lam=float(opts["lam"]),
        seed=int(opts["seed"]),
        log_path=out_dir / "loss.csv",
        resume_from=opts.get("resume"),
        checkpoint_path=out_dir / "checkpoint",
    )
    _write_manifest(out_dir, "train-toy", opts, spec)
    losses = result.losses
    if len(losses) >= 100:
        head, tail = losses[:50].mean(), losses[-50:].mean()
        print(f"loss: first-50 mean {head:.5g} -> last-50 mean {tail:.5g} "
              f"(ratio {tail / head:.3f})")
    elif len(losses):
        print(f"loss: {losses[0]:.5g} -> {losses[-1]:.5g}")
    print(f"checkpoint + loss curve written to {out_dir}")
    return 0


def run_gradcheck(opts: dict) -> int:
    module = opts.get("module")
    if module is not None and module not in suite_modules():
        raise UsageError(f"--module must be one of {suite_modules()}, got {module!r}")
    results = gradient_suite(module=module, n_coords=int(opts.get("coords", 64)))
    worst: dict[str, float] = {}
    failed = []
    for res in results:
        worst[res.module] = max(worst.get(res.module, 0.0), res.report.max_rel_error)
        status = "ok" if res.report.passed else "FAIL"
        print(f"{status:4s} {res.module:14s} {res.op:28s} "
              f"max_rel_err={res.report.max_rel_error:.3e} tol={res.report.tol:g}")
        if not res.report.passed:
            failed.append(res)
    print("\nworst relative error per module:")
    for mod, err in worst.items():
        print(f"  {mod:14s} {err:.3e}")
    if failed:
        raise NumericsError(f"{len(failed)} gradient check(s) failed")
    return 0


def run_params(opts: dict) -> int:
    levels = tuple(int(c) for c in str(opts["levels"]).split(","))
    tallies = []
    for arch in ARCHES:
        spec = NetworkSpec(fusion=FusionKind.from_arch(arch), levels=levels, seed=0)
        tallies.append((param_count(build_network(spec)), arch))
    tallies.sort()
    width = max(len(ARCH_LABELS[a]) for _, a in tallies)
    for count, arch in tallies:
        print(f"{ARCH_LABELS[arch]:<{width}s}  {count:>10d}")
    return 0


def run_make_inputs(opts: dict) -> int:
    out_dir = Path(opts["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    images = make_natural_images(Rng(int(opts["seed"])), int(opts["count"]),
                                 int(opts["size"]))
    for i, img in enumerate(images):
        save_image(img, out_dir / f"input_{i:03d}.ppm")
    _write_manifest(out_dir, "make-inputs", opts, None)
    print(f"wrote {len(images)} images to {out_dir}")
    return 0


_RUNNERS = {
    "spectra": run_spectra,
    "forward": run_forward,
    "gif": run_gif,
    "train-toy": run_train_toy,
    "gradcheck": run_gradcheck,
    "params": run_params,
    "make-inputs": run_make_inputs,
}


def run_replay(opts: dict) -> int:
    manifest = RunManifest.read(opts["manifest"])
    if manifest.command not in _RUNNERS:
        raise UsageError(f"manifest command {manifest.command!r} is not replayable")
    replay_opts = dict(manifest.options)
    if opts.get("out"):
        replay_opts["out"] = opts["out"]
    return _RUNNERS[manifest.command](replay_opts)


def build_parser() -> Parser:
    parser = Parser(prog="gunet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gunet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_arch_flags(p):
        p.add_argument("--arch", choices=ARCHES, default="gunet")
        p.add_argument("--levels", default="16,32,64,128",
                       help="comma-separated feature widths per level")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--radius", default="full",
                       help="guided-filter window radius (integer or 'full')")
        p.add_argument("--eps", type=float, default=1e-3,
                       help="guided-filter regularisation")

    p = sub.add_parser("spectra", help="initialization-bias spectral study")
    add_arch_flags(p)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--inputs", required=True, help="directory of input images")
    p.add_argument("--size", type=int, default=256, help="centre-crop size (power of two)")
    p.add_argument("--avg", choices=("mag", "complex"), default="mag")
    p.add_argument("--normalize", choices=("moment_match", "none"), default="moment_match")
    p.add_argument("--exposure", type=float, default=0.0,
                   help="exposure (stops) for the spectrum view images")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("forward", help="run one image through a network")
    add_arch_flags(p)
    p.add_argument("--image", required=True)
    p.add_argument("--checkpoint", default=None,
                   help="checkpoint path (overrides --arch/--seed)")
    p.add_argument("--out", required=True, help="output image (.pfm keeps float values)")

    p = sub.add_parser("gif", help="guided filtering/upsampling of an image pair")
    p.add_argument("--input", required=True, help="image to be filtered (low-res for upsampling)")
    p.add_argument("--guide", required=True, help="guidance image (same size or exactly 2x)")
    p.add_argument("--radius", default="full")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-toy", help="toy inverse-tone-mapping training")
    add_arch_flags(p)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--lam", type=float, default=5.0, help="cosine-term weight")
    p.add_argument("--loss", choices=("l1cos", "smooth_l1"), default="l1cos")
    p.add_argument("--count", type=int, default=32, help="dataset size")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.add_argument("--out", required=True)

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p.add_argument("--module", default=None, help=f"restrict to one of {suite_modules()}")
    p.add_argument("--coords", type=int, default=64)

    p = sub.add_parser("params", help="parameter tallies for all variants")
    p.add_argument("--levels", default="16,32,64,128")

    p = sub.add_parser("make-inputs", help="write synthetic natural test images")
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("replay", help="re-run a recorded manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="override the output destination")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opts = {k: v for k, v in vars(args).items() if k != "command"}
        if args.command == "replay":
            return run_replay(opts)
        return _RUNNERS[args.command](opts)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except NumericsError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except (ImageFormatError, ShapeError, FileNotFoundError, NotADirectoryError,
            json.JSONDecodeError, GunetError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
