"""Categorical data model: feature schema, CSV ingestion, subsampling.

Labels are strings at the I/O boundary only. Internally every value is a
small integer code (its index in the schema domain), and the full
assignment space is addressed row-major with the last feature varying
fastest. Domain order in the schema file is the tie-break canon for
everything downstream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import CapacityError, DataFormatError, QueryError, SchemaError

DEFAULT_ASSIGNMENT_CAP = 1 << 24


@dataclass(frozen=True)
class FeatureSchema:
    """Names and finite domains of the features and of the response."""

    feature_names: tuple[str, ...]
    feature_domains: tuple[tuple[str, ...], ...]
    response_name: str
    response_domain: tuple[str, ...]

    def __post_init__(self):
        if len(self.feature_names) < 1:
            raise SchemaError("at least one feature is required")
        if len(self.feature_names) != len(self.feature_domains):
            raise SchemaError("feature_names and feature_domains differ in length")
        seen = set()
        for name in (*self.feature_names, self.response_name):
            if name in seen:
                raise SchemaError(f"duplicate column name {name!r}")
            seen.add(name)
        for name, domain in zip(self.feature_names, self.feature_domains):
            if len(domain) < 2:
                raise SchemaError(f"feature {name!r}: domain must have >= 2 labels")
            if len(set(domain)) != len(domain):
                raise SchemaError(f"feature {name!r}: duplicate label in domain")
        if len(self.response_domain) < 2:
            raise SchemaError(
                f"response {self.response_name!r}: domain must have >= 2 labels"
            )
        if len(set(self.response_domain)) != len(self.response_domain):
            raise SchemaError(
                f"response {self.response_name!r}: duplicate label in domain"
            )

    @property
    def k(self) -> int:
        return len(self.feature_names)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(d) for d in self.feature_domains)

    @property
    def num_classes(self) -> int:
        return len(self.response_domain)

    @property
    def num_assignments(self) -> int:
        """Size of the full assignment space (exact Python integer)."""
        out = 1
        for size in self.sizes:
            out *= size
        return out

    @cached_property
    def strides(self) -> tuple[int, ...]:
        """Row-major strides: the last feature varies fastest."""
        sizes = self.sizes
        out = [1] * self.k
        for j in range(self.k - 2, -1, -1):
            out[j] = out[j + 1] * sizes[j + 1]
        return tuple(out)

    @cached_property
    def _feature_codecs(self) -> tuple[dict[str, int], ...]:
        return tuple({lab: i for i, lab in enumerate(d)} for d in self.feature_domains)

    @cached_property
    def _response_codec(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.response_domain)}

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise QueryError(f"unknown feature {name!r}") from None

    def feature_code(self, j: int, label: str) -> int:
        try:
            return self._feature_codecs[j][label]
        except KeyError:
            raise DataFormatError(
                f"unknown label {label!r} for feature {self.feature_names[j]!r}"
            ) from None

    def response_code(self, label: str) -> int:
        try:
            return self._response_codec[label]
        except KeyError:
            raise DataFormatError(
                f"unknown label {label!r} for response {self.response_name!r}"
            ) from None

    def assignment_index(self, codes) -> int:
        """Linear index of a full assignment under the row-major layout."""
        strides = self.strides
        return int(sum(int(c) * strides[j] for j, c in enumerate(codes)))

    def codes_from_index(self, index: int) -> tuple[int, ...]:
        sizes = self.sizes
        return tuple(
            (index // self.strides[j]) % sizes[j] for j in range(self.k)
        )

    def sizes_array(self) -> np.ndarray:
        return np.asarray(self.sizes, dtype=np.int64)

    def strides_array(self) -> np.ndarray:
        return np.asarray(self.strides, dtype=np.int64)


def load_schema(path, *, max_assignments: int = DEFAULT_ASSIGNMENT_CAP) -> FeatureSchema:
    """Load and validate a JSON schema file.

    The document has the shape ``{"features": [{"name", "domain": [...]}, ...],
    "response": {"name", "domain": [...]}}`` with all labels as strings.
    Schemas whose assignment-space size exceeds ``max_assignments`` are
    rejected here, before any data is touched.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read schema file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc

    def _domain(field: str, value) -> tuple[str, ...]:
        if not isinstance(value, list) or not value:
            raise SchemaError(f"{path}: {field}: 'domain' must be a non-empty list")
        for lab in value:
            if not isinstance(lab, str):
                raise SchemaError(f"{path}: {field}: label {lab!r} is not a string")
        return tuple(value)

    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: top-level document must be an object")
    features = raw.get("features")
    response = raw.get("response")
    if not isinstance(features, list) or not features:
        raise SchemaError(f"{path}: 'features' must be a non-empty list")
    if not isinstance(response, dict):
        raise SchemaError(f"{path}: 'response' must be an object")

    names, domains = [], []
    for i, item in enumerate(features):
        if not isinstance(item, dict) or "name" not in item or "domain" not in item:
            raise SchemaError(f"{path}: features[{i}]: expected 'name' and 'domain'")
        name = item["name"]
        if not isinstance(name, str) or not name:
            raise SchemaError(f"{path}: features[{i}]: 'name' must be a string")
        names.append(name)
        domains.append(_domain(f"feature {name!r}", item["domain"]))
    if "name" not in response or "domain" not in response:
        raise SchemaError(f"{path}: 'response' needs 'name' and 'domain'")

    schema = FeatureSchema(
        feature_names=tuple(names),
        feature_domains=tuple(domains),
        response_name=str(response["name"]),
        response_domain=_domain("response", response["domain"]),
    )
    if schema.num_assignments > max_assignments:
        raise CapacityError(
            f"{path}: assignment space has {schema.num_assignments} cells, "
            f"over the cap of {max_assignments}; raise the cap only if exact "
            f"enumeration at that scale is intended"
        )
    return schema


def write_schema(schema: FeatureSchema, path) -> None:
    doc = {
        "features": [
            {"name": n, "domain": list(d)}
            for n, d in zip(schema.feature_names, schema.feature_domains)
        ],
        "response": {"name": schema.response_name, "domain": list(schema.response_domain)},
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class Dataset:
    """An encoded training sample: one row per observed individual."""

    schema: FeatureSchema
    codes: np.ndarray  # (n, k) int64 feature codes
    y: np.ndarray  # (n,) int64 response codes

    def __post_init__(self):
        if self.codes.ndim != 2 or self.codes.shape[1] != self.schema.k:
            raise DataFormatError("codes must have shape (n, k)")
        if self.y.shape != (self.codes.shape[0],):
            raise DataFormatError("y must have one entry per row")
        if self.codes.shape[0] < 1:
            raise DataFormatError("dataset must contain at least one row")
        sizes = self.schema.sizes_array()
        if (self.codes < 0).any() or (self.codes >= sizes[None, :]).any():
            raise DataFormatError("feature code out of domain")
        if (self.y < 0).any() or (self.y >= self.schema.num_classes).any():
            raise DataFormatError("response code out of domain")
        self.codes.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.codes.shape[0])

    @cached_property
    def assignment_indices(self) -> np.ndarray:
        """Linear assignment index of every row."""
        out = self.codes @ self.schema.strides_array()
        out.setflags(write=False)
        return out


def load_dataset(schema: FeatureSchema, path) -> Dataset:
    """Read an RFC-4180 CSV with a header row into an encoded Dataset.

    Columns are matched to the schema by name, in any order. Every cell is
    validated against its domain; errors report the file row and column.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows_raw = list(csv.reader(fh))
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read data file: {exc}") from exc
    if not rows_raw:
        raise DataFormatError(f"{path}: file is empty")
    reader = iter(rows_raw)
    header = next(reader)

    wanted = list(schema.feature_names) + [schema.response_name]
    positions = {}
    for col, name in enumerate(header):
        if name in positions:
            raise DataFormatError(f"{path}: duplicate column {name!r}")
        positions[name] = col
    for name in wanted:
        if name not in positions:
            raise DataFormatError(f"{path}: missing column {name!r}")
    extra = [name for name in positions if name not in wanted]
    if extra:
        raise DataFormatError(f"{path}: unexpected column(s) {extra!r}")

    feat_cols = [positions[name] for name in schema.feature_names]
    resp_col = positions[schema.response_name]

    codes_rows = []
    y_rows = []
    for rownum, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataFormatError(
                f"{path}: row {rownum}: expected {len(header)} cells, got {len(row)}"
            )
        try:
            codes_rows.append(
                [schema.feature_code(j, row[col]) for j, col in enumerate(feat_cols)]
            )
            y_rows.append(schema.response_code(row[resp_col]))
        except DataFormatError as exc:
            raise DataFormatError(f"{path}: row {rownum}: {exc}") from None
    if not codes_rows:
        raise DataFormatError(f"{path}: no data rows after the header")

    return Dataset(
        schema=schema,
        codes=np.asarray(codes_rows, dtype=np.int64),
        y=np.asarray(y_rows, dtype=np.int64),
    )


def write_dataset(ds: Dataset, path) -> None:
    """Write a Dataset back to CSV with labels, header included."""
    schema = ds.schema
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(schema.feature_names) + [schema.response_name])
        for row, yv in zip(ds.codes, ds.y):
            writer.writerow(
                [schema.feature_domains[j][c] for j, c in enumerate(row)]
                + [schema.response_domain[yv]]
            )


@dataclass(frozen=True, eq=False)
class Subsample:
    """Rows of a dataset matching a partial assignment and a response class."""

    parent: Dataset
    fixed: tuple[tuple[int, int], ...]  # sorted (feature index, code) pairs
    target: int
    member_indices: np.ndarray

    @property
    def size(self) -> int:
        return int(self.member_indices.shape[0])

    @cached_property
    def distinct(self) -> tuple[np.ndarray, np.ndarray]:
        """(sorted distinct assignment indices, multiplicities) of the members."""
        idx = self.parent.assignment_indices[self.member_indices]
        return np.unique(idx, return_counts=True)

    def distinct_codes(self) -> np.ndarray:
        """Decoded (d, k) code matrix for the distinct member vectors."""
        schema = self.parent.schema
        uniq, _ = self.distinct
        sizes = schema.sizes_array()
        strides = schema.strides_array()
        return (uniq[:, None] // strides[None, :]) % sizes[None, :]


def subsample(ds: Dataset, fixed: Mapping[int, int], target: int) -> Subsample:
    """Select the rows with the given feature codes and response class.

    ``fixed`` maps feature indices to codes; an empty mapping selects on the
    response alone. An empty result is legal here and rejected downstream.
    """
    schema = ds.schema
    if not 0 <= int(target) < schema.num_classes:
        raise DataFormatError(f"response code {target} out of range")
    mask = ds.y == int(target)
    for j, code in fixed.items():
        if not 0 <= int(j) < schema.k:
            raise DataFormatError(f"feature index {j} out of range")
        if not 0 <= int(code) < schema.sizes[int(j)]:
            raise DataFormatError(
                f"code {code} out of domain for feature "
                f"{schema.feature_names[int(j)]!r}"
            )
        mask &= ds.codes[:, int(j)] == int(code)
    return Subsample(
        parent=ds,
        fixed=tuple(sorted((int(j), int(c)) for j, c in fixed.items())),
        target=int(target),
        member_indices=np.flatnonzero(mask),
    )


def observed_domains(ds: Dataset) -> tuple[FeatureSchema, Dataset]:
    """Shrink each feature domain to the values present in the sample.

    Returns a re-encoded copy under the restricted schema; relative label
    order is preserved. A feature observed at fewer than two values cannot
    form a valid domain and raises SchemaError.
    """
    schema = ds.schema
    new_domains = []
    remap = []
    for j in range(schema.k):
        seen = np.unique(ds.codes[:, j])
        if seen.shape[0] < 2:
            raise SchemaError(
                f"feature {schema.feature_names[j]!r}: only "
                f"{seen.shape[0]} value(s) observed, need >= 2"
            )
        new_domains.append(tuple(schema.feature_domains[j][c] for c in seen))
        lookup = np.full(schema.sizes[j], -1, dtype=np.int64)
        lookup[seen] = np.arange(seen.shape[0])
        remap.append(lookup)
    new_schema = FeatureSchema(
        feature_names=schema.feature_names,
        feature_domains=tuple(new_domains),
        response_name=schema.response_name,
        response_domain=schema.response_domain,
    )
    new_codes = np.column_stack(
        [remap[j][ds.codes[:, j]] for j in range(schema.k)]
    ).astype(np.int64)
    return new_schema, Dataset(schema=new_schema, codes=new_codes, y=ds.y.copy())


def resolve_partial(schema: FeatureSchema, pairs: Iterable[tuple[str, str]]) -> dict[int, int]:
    """Translate (feature name, label) pairs into a code-level assignment."""
    fixed: dict[int, int] = {}
    for name, label in pairs:
        j = schema.feature_index(name)
        if j in fixed:
            raise QueryError(f"feature {name!r} fixed twice")
        try:
            fixed[j] = schema.feature_code(j, label)
        except DataFormatError as exc:
            raise QueryError(str(exc)) from None
    return fixed
