#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the two hot loops on synthetic inputs: exact marginalization of a
value table over every coalition of one instance, and the dense subset-sum
Shapley transform. Both backends compute bit-identical results; this script
verifies that on the benchmark inputs and reports the speedup.

Usage:
    python benchmarks/bench_kernels.py [--features 8] [--domain 4] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from shapinf._kernels import _fallback
from shapinf.shapley import coalition_weights

try:
    from shapinf._kernels import _speedups
except ImportError:
    _speedups = None


def layout(k: int, domain: int, rng):
    sizes = np.full(k, domain, dtype=np.int64)
    strides = np.empty(k, dtype=np.int64)
    strides[-1] = 1
    for j in range(k - 2, -1, -1):
        strides[j] = strides[j + 1] * sizes[j + 1]
    table = rng.random(int(sizes.prod()))
    codes = rng.integers(0, domain, size=k).astype(np.int64)
    return sizes, strides, table, codes


def bench(fn, repeat: int) -> tuple[float, object]:
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--features", type=int, default=8)
    parser.add_argument("--domain", type=int, default=4)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    k = args.features
    sizes, strides, table, codes = layout(k, args.domain, rng)
    masks = list(range(1 << k))
    print(
        f"marginalization: {len(table)} table cells, {len(masks)} coalitions, "
        f"best of {args.repeat}"
    )

    def run_masked(impl):
        return [impl.masked_mean(table, sizes, strides, codes, m) for m in masks]

    t_py, r_py = bench(lambda: run_masked(_fallback), args.repeat)
    print(f"  python   {t_py * 1e3:10.2f} ms")
    if _speedups is not None:
        t_c, r_c = bench(lambda: run_masked(_speedups), args.repeat)
        identical = all(a == b for a, b in zip(r_py, r_c))
        print(f"  compiled {t_c * 1e3:10.2f} ms   ({t_py / t_c:6.1f}x, "
              f"bit-identical: {identical})")

    t = min(k, 16)
    values = rng.uniform(-1, 1, size=1 << t)
    values[0] = 0.0
    weights = np.asarray(coalition_weights(t))
    print(f"shapley transform: {t} players, {1 << t} coalition values")

    t_py, r_py = bench(lambda: _fallback.shapley_dense(values, weights, t), args.repeat)
    print(f"  python   {t_py * 1e3:10.2f} ms")
    if _speedups is not None:
        t_c, r_c = bench(lambda: _speedups.shapley_dense(values, weights, t), args.repeat)
        identical = bool(np.array_equal(r_py, r_c))
        print(f"  compiled {t_c * 1e3:10.2f} ms   ({t_py / t_c:6.1f}x, "
              f"bit-identical: {identical})")
    if _speedups is None:
        print("compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
