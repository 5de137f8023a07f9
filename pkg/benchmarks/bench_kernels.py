#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Shapes mirror what the networks actually run: the per-level convolutions
of the default [16, 32, 64, 128] architecture at the analysis (128x128)
and training (batch 4, 64x64) resolutions, plus the box sums the guided
filter uses.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from gunet.backends import available_backends, get_backend

CONV_CASES = [
    # (label, n, c_in, c_out, size, k, stride, pad)
    ("level0 down   1x16x128^2 s2", 1, 16, 16, 128, 3, 2, 1),
    ("level0 post   1x16->32 64^2", 1, 16, 32, 64, 3, 1, 1),
    ("level2 post   1x64->128 16^2", 1, 64, 128, 16, 3, 1, 1),
    ("bottleneck    1x128 8^2", 1, 128, 128, 8, 3, 1, 1),
    ("train down    4x16x64^2 s2", 4, 16, 16, 64, 3, 2, 1),
    ("train bneck   4x128 4^2", 4, 128, 128, 4, 3, 1, 1),
]

BOX_CASES = [
    ("box r=1  1x16x64^2", 1, 16, 64, 1),
    ("box r=4  1x32x32^2", 1, 32, 32, 4),
]


def time_fn(fn, repeats):
    fn()  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    backends = {name: get_backend(name) for name in available_backends()}
    names = list(backends)
    print(f"backends: {names}\n")

    header = f"{'case':<30s}" + "".join(f"{n:>12s}" for n in names) + f"{'ratio':>10s}"
    print(header)
    print("-" * len(header))

    for label, n, ci, co, size, k, stride, pad in CONV_CASES:
        x = rng.standard_normal((n, ci, size, size))
        w = rng.standard_normal((co, ci, k, k))
        oh = (size + 2 * pad - k) // stride + 1
        gy = rng.standard_normal((n, co, oh, oh))
        for op, call in [
            ("fwd", lambda b: b.conv2d_forward(x, w, stride, pad)),
            ("gin", lambda b: b.conv2d_grad_input(gy, w, stride, pad, size, size)),
            ("gw ", lambda b: b.conv2d_grad_weight(x, gy, stride, pad, k, k)),
        ]:
            times = [time_fn(lambda b=backends[nm]: call(b), args.repeats) for nm in names]
            ratio = times[0] / times[-1] if len(times) > 1 else 1.0
            row = f"{label + ' ' + op:<30s}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
            print(row + f"{ratio:>10.2f}")

    for label, n, c, size, r in BOX_CASES:
        x = rng.standard_normal((n, c, size, size))
        times = [time_fn(lambda nm=nm: backends[nm].box_sum(x, r), args.repeats)
                 for nm in names]
        ratio = times[0] / times[-1] if len(times) > 1 else 1.0
        row = f"{label:<30s}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        print(row + f"{ratio:>10.2f}")

    print("\nratio = first backend time / last backend time (>1 means the last is faster)")


if __name__ == "__main__":
    main()
