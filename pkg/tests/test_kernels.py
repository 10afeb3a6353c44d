"""Backend parity and kernel correctness against independent oracles."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from shapinf._kernels import _fallback, active_backend
from shapinf.shapley import coalition_weights

try:
    from shapinf._kernels import _speedups
except ImportError:
    _speedups = None

needs_compiled = pytest.mark.skipif(
    _speedups is None, reason="compiled kernels not built"
)


def random_layout(rng):
    k = int(rng.integers(1, 6))
    sizes = np.asarray([int(rng.integers(2, 5)) for _ in range(k)], dtype=np.int64)
    strides = np.empty(k, dtype=np.int64)
    strides[-1] = 1
    for j in range(k - 2, -1, -1):
        strides[j] = strides[j + 1] * sizes[j + 1]
    table = rng.standard_normal(int(sizes.prod()))
    codes = np.asarray([int(rng.integers(0, s)) for s in sizes], dtype=np.int64)
    return sizes, strides, table, codes


def test_active_backend_reports():
    assert active_backend() in ("compiled", "python")


def test_masked_mean_matches_numpy_oracle():
    rng = np.random.default_rng(7)
    for _ in range(25):
        sizes, strides, table, codes = random_layout(rng)
        grid = table.reshape(tuple(sizes))
        for mask in range(1 << len(sizes)):
            selector = tuple(
                int(codes[j]) if (mask >> j) & 1 else slice(None)
                for j in range(len(sizes))
            )
            expect = float(np.mean(grid[selector]))
            got = _fallback.masked_mean(table, sizes, strides, codes, mask)
            assert got == pytest.approx(expect, abs=1e-12)


@needs_compiled
def test_masked_mean_backend_parity_is_bitwise():
    rng = np.random.default_rng(11)
    for _ in range(25):
        sizes, strides, table, codes = random_layout(rng)
        for mask in range(1 << len(sizes)):
            a = _speedups.masked_mean(table, sizes, strides, codes, mask)
            b = _fallback.masked_mean(table, sizes, strides, codes, mask)
            assert a == b


def shapley_permutation_oracle(values: np.ndarray, t: int) -> np.ndarray:
    out = np.zeros(t)
    for order in itertools.permutations(range(t)):
        mask = 0
        prev = 0.0
        for j in order:
            mask |= 1 << j
            out[j] += values[mask] - prev
            prev = values[mask]
    return out / math.factorial(t)


def test_shapley_dense_matches_permutation_oracle():
    rng = np.random.default_rng(3)
    for t in (1, 2, 3, 4, 5):
        values = rng.uniform(-1, 1, size=1 << t)
        values[0] = 0.0
        weights = np.asarray(coalition_weights(t))
        got = _fallback.shapley_dense(values, weights, t)
        expect = shapley_permutation_oracle(values, t)
        assert np.max(np.abs(got - expect)) < 1e-12


@needs_compiled
def test_shapley_dense_backend_parity_is_bitwise():
    rng = np.random.default_rng(5)
    for t in (1, 3, 6, 10):
        values = rng.uniform(-1, 1, size=1 << t)
        values[0] = 0.0
        weights = np.asarray(coalition_weights(t))
        a = _speedups.shapley_dense(values, weights, t)
        b = _fallback.shapley_dense(values, weights, t)
        assert np.array_equal(a, b)
