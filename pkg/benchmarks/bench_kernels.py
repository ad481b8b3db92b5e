#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the numpy fallback.

Times the three hot kernels on representative shapes plus a whole
backbone forward pass per backend, and reports the speedup of the compiled
path.  Usage:

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import math
import statistics
import time

import numpy as np

from contrastiq._kernels import HAVE_COMPILED, _pykernels

if HAVE_COMPILED:
    from contrastiq._kernels import _cykernels
else:
    _cykernels = None


def timeit(fn, repeats: int) -> float:
    fn()  # warm up
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def kernel_cases():
    rng = np.random.default_rng(0)

    def f32(*shape, scale=1.0):
        return (rng.standard_normal(shape) * scale).astype(np.float32)

    cos10, sin10 = math.cos(math.radians(10)), math.sin(math.radians(10))
    x_small = f32(32, 56, 56)
    w_pw = f32(96, 32, 1, 1, scale=0.1)
    w_dw = f32(96, 1, 3, 3, scale=0.1)
    x_dw = f32(96, 56, 56)
    x_img = f32(3, 480, 640, scale=80)
    cases = [
        ("conv 1x1 32->96 @56x56", lambda k: k.conv2d(x_small, w_pw, None, 1, 0, 1)),
        ("conv dw 3x3 96ch @56x56", lambda k: k.conv2d(x_dw, w_dw, None, 1, 1, 96)),
        ("resize 640x480 -> 224x224", lambda k: k.resize_bilinear(x_img, 224, 224)),
        ("rotate 10deg @640x480", lambda k: k.rotate_bilinear(x_img, cos10, sin10)),
    ]
    return cases


def backbone_case():
    from contrastiq.features import nano_config, seeded_random_weights
    from contrastiq.features import backbone as bb
    from contrastiq.imagecore import Tensor3

    cfg = nano_config()
    weights = seeded_random_weights(cfg, seed=1)
    t = Tensor3(np.random.default_rng(2).standard_normal(
        (3, cfg.input_size, cfg.input_size)).astype(np.float32))

    def run_with(kernels):
        original = bb._kernels
        bb._kernels = kernels
        try:
            bb.backbone_forward(t, cfg, weights)
        finally:
            bb._kernels = original

    return "nano backbone forward @224", run_with


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not HAVE_COMPILED:
        print("compiled extension not built; only the numpy backend is available")

    rows = []
    for name, fn in kernel_cases():
        t_py = timeit(lambda: fn(_pykernels), args.repeats)
        t_cy = timeit(lambda: fn(_cykernels), args.repeats) if HAVE_COMPILED else float("nan")
        rows.append((name, t_py, t_cy))

    name, run_with = backbone_case()
    t_py = timeit(lambda: run_with(_pykernels), args.repeats)
    t_cy = timeit(lambda: run_with(_cykernels), args.repeats) if HAVE_COMPILED else float("nan")
    rows.append((name, t_py, t_cy))

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'numpy':>10}  {'cython':>10}  {'speedup':>8}")
    for case, py, cy in rows:
        speed = f"{py / cy:.2f}x" if HAVE_COMPILED else "-"
        cy_txt = f"{cy * 1e3:8.2f}ms" if HAVE_COMPILED else "       -"
        print(f"{case:<{width}}  {py * 1e3:8.2f}ms  {cy_txt}  {speed:>8}")

    if HAVE_COMPILED:
        import contrastiq._kernels as dispatch

        t_mix = timeit(lambda: run_with(dispatch), args.repeats)
        print(f"\nshipped dispatch (GEMM dense conv + compiled grouped/resample): "
              f"{name} {t_mix * 1e3:.2f}ms")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
