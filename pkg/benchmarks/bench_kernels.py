#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times connected-component labeling (both connectivities) and hole filling
on random masks. Run after installing the package:

    python3 benchmarks/bench_kernels.py [--sizes 256 512 1024] [--density 0.5]
"""

import argparse
import time

import numpy as np

from mitodet._kernels import pyfallback

try:
    from mitodet._kernels import _ccl as compiled
except ImportError:
    compiled = None


def best_of(runs, fn, *args):
    times = []
    for _ in range(runs):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def bench(sizes, density, runs):
    rng = np.random.default_rng(0)
    header = f"{'kernel':<22} {'size':>10} {'python':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for side in sizes:
        mask = np.ascontiguousarray(rng.random((side, side)) < density, dtype=np.uint8)
        cases = [
            ("label_components c=4", lambda impl: impl.label_components(mask, 4)),
            ("label_components c=8", lambda impl: impl.label_components(mask, 8)),
            ("fill_holes", lambda impl: impl.fill_holes(mask)),
        ]
        for name, call in cases:
            py_time = best_of(runs, call, pyfallback)
            if compiled is None:
                print(f"{name:<22} {side:>7}^2 {py_time:>9.4f}s {'n/a':>10} {'n/a':>8}")
                continue
            c_time = best_of(runs, call, compiled)
            # identical outputs are asserted by the test suite; here we only time
            print(
                f"{name:<22} {side:>7}^2 {py_time:>9.4f}s {c_time:>9.4f}s "
                f"{py_time / c_time:>7.1f}x"
            )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[256, 512, 1024])
    parser.add_argument("--density", type=float, default=0.5)
    parser.add_argument("--runs", type=int, default=3, help="best-of-N timing")
    args = parser.parse_args()
    if compiled is None:
        print("compiled backend not importable; timing the fallback only\n")
    bench(args.sizes, args.density, args.runs)


if __name__ == "__main__":
    main()
