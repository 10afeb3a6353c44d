"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from shapinf.data import Dataset, FeatureSchema


def make_schema(sizes, n_classes: int = 2, names=None) -> FeatureSchema:
    names = names or [f"F{j}" for j in range(len(sizes))]
    return FeatureSchema(
        feature_names=tuple(names),
        feature_domains=tuple(tuple(str(v) for v in range(s)) for s in sizes),
        response_name="Y",
        response_domain=tuple(str(c) for c in range(n_classes)),
    )


def full_grid_codes(schema: FeatureSchema) -> np.ndarray:
    """All full assignments, row-major (assignment-index order)."""
    lin = np.arange(schema.num_assignments, dtype=np.int64)
    return (lin[:, None] // schema.strides_array()[None, :]) % schema.sizes_array()[None, :]


def grid_dataset(schema: FeatureSchema, y_fn) -> Dataset:
    """One row per assignment, labelled by ``y_fn(codes_row) -> class code``."""
    codes = full_grid_codes(schema)
    y = np.asarray([int(y_fn(row)) for row in codes], dtype=np.int64)
    return Dataset(schema=schema, codes=codes, y=y)


def random_dataset(rng: np.random.Generator) -> Dataset:
    """Small random categorical dataset: k <= 5, arities <= 3."""
    k = int(rng.integers(2, 6))
    sizes = [int(rng.integers(2, 4)) for _ in range(k)]
    n_classes = int(rng.integers(2, 4))
    schema = make_schema(sizes, n_classes)
    n = int(rng.integers(8, 41))
    codes = rng.integers(0, np.asarray(sizes), size=(n, k)).astype(np.int64)
    y = rng.integers(0, n_classes, size=n).astype(np.int64)
    return Dataset(schema=schema, codes=codes, y=y)


def random_query(rng: np.random.Generator, ds: Dataset):
    """A (fixed, target, scope) triple guaranteed to match at least one row."""
    schema = ds.schema
    row = int(rng.integers(0, ds.n))
    r_size = int(rng.integers(0, schema.k + 1))
    members = sorted(rng.choice(schema.k, size=r_size, replace=False).tolist())
    fixed = {int(j): int(ds.codes[row, j]) for j in members}
    target = int(ds.y[row])
    t_size = int(rng.integers(1, schema.k + 1))
    scope = sorted(int(j) for j in rng.choice(schema.k, size=t_size, replace=False))
    return fixed, target, tuple(scope)
