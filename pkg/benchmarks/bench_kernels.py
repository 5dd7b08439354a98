"""Benchmark the compiled kernels against the pure numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--height 480 --width 640 --repeats 20]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from elvis._kernels import pure

try:
    from elvis._kernels import _ckernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--height", type=int, default=480)
    parser.add_argument("--width", type=int, default=640)
    parser.add_argument("--block-size", type=int, default=16)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    luma_a = rng.integers(0, 256, (args.height, args.width), np.uint8)
    luma_b = rng.integers(0, 256, (args.height, args.width), np.uint8)
    plane = rng.uniform(0, 255, (args.height, args.width))
    mask = np.zeros((args.height, args.width), np.uint8)
    mask[
        args.height // 4 : args.height // 2, args.width // 4 : args.width // 2
    ] = 1

    cases = {
        "sobel_block_means": lambda impl: impl.sobel_block_means(luma_a, args.block_size),
        "absdiff_block_means": lambda impl: impl.absdiff_block_means(
            luma_a, luma_b, args.block_size
        ),
        "diffusion_fill_plane": lambda impl: impl.diffusion_fill_plane(
            plane.copy(), mask, 1e-3, 200
        ),
    }

    print(f"{args.width}x{args.height}, block {args.block_size}, best of {args.repeats}")
    header = f"{'kernel':<22}{'pure (ms)':>12}{'cython (ms)':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, call in cases.items():
        t_pure = best_of(lambda: call(pure), args.repeats)
        if compiled is None:
            print(f"{name:<22}{t_pure * 1e3:>12.3f}{'n/a':>14}{'n/a':>10}")
            continue
        t_comp = best_of(lambda: call(compiled), args.repeats)
        print(
            f"{name:<22}{t_pure * 1e3:>12.3f}{t_comp * 1e3:>14.3f}"
            f"{t_pure / t_comp:>9.2f}x"
        )
    if compiled is None:
        print("compiled extension not importable; built fallback numbers only")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
