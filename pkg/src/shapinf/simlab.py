"""Seeded generators for the three synthetic benchmarks, plus the harness.

All three use four i.i.d. uniform categorical features. The two mixture
kinds copy the response from feature X1 for a leading block of rows and
from X2 for the rest (a deterministic split, which keeps subsample counts
reproducible); the independent kind draws the response on its own.

One master seed drives three derived streams (features, response/mixture,
classifier), so experiments can vary the classifier seed while holding the
data fixed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifiers import ForestParams, RandomForest, train_forest
from .data import Dataset, FeatureSchema, write_dataset, write_schema
from .datta import DattaResult, datta_influence
from .errors import QueryError
from .game import ComputeSettings
from .influence import InfluenceEngine, ScenarioReport

KIND_ALIASES = {
    "sim1": "mixture-binary",
    "sim2": "independent-binary",
    "sim3": "mixture-ternary",
}
KINDS = tuple(KIND_ALIASES.values())

_DEFAULT_WEIGHTS = {
    "mixture-binary": (0.5, 0.5),
    "independent-binary": (0.5, 0.5),  # unused, kept for a uniform shape
    "mixture-ternary": (1.0 / 3.0, 2.0 / 3.0),
}


@dataclass(frozen=True)
class SimSpec:
    kind: str
    n: int
    seed: int
    mixture_weights: tuple[float, float] | None = None

    def __post_init__(self):
        kind = KIND_ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise QueryError(f"unknown simulation kind {self.kind!r}")
        if self.n < 1:
            raise QueryError("n must be >= 1")
        weights = self.mixture_weights or _DEFAULT_WEIGHTS[kind]
        if len(weights) != 2 or min(weights) < 0 or abs(sum(weights) - 1.0) > 1e-12:
            raise QueryError("mixture weights must be two nonnegative values summing to 1")
        object.__setattr__(self, "mixture_weights", tuple(float(w) for w in weights))


def _schema(feature_arity: int, response_arity: int) -> FeatureSchema:
    domain = tuple(str(v) for v in range(feature_arity))
    return FeatureSchema(
        feature_names=("X1", "X2", "X3", "X4"),
        feature_domains=(domain,) * 4,
        response_name="Y",
        response_domain=tuple(str(v) for v in range(response_arity)),
    )


def binary_schema() -> FeatureSchema:
    return _schema(2, 2)


def ternary_schema() -> FeatureSchema:
    return _schema(3, 3)


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, int]:
    features_ss, response_ss, clf_ss = np.random.SeedSequence(seed).spawn(3)
    clf_seed = int(clf_ss.generate_state(1)[0])
    return (
        np.random.default_rng(features_ss),
        np.random.default_rng(response_ss),
        clf_seed,
    )


def classifier_seed(seed: int) -> int:
    """The classifier stream derived from a master seed."""
    return _streams(seed)[2]


def generate(spec: SimSpec) -> Dataset:
    """Deterministic sample for a simulation spec."""
    feat_rng, resp_rng, _ = _streams(spec.seed)
    arity = 3 if spec.kind == "mixture-ternary" else 2
    schema = _schema(arity, arity)
    codes = feat_rng.integers(0, arity, size=(spec.n, 4), dtype=np.int64)
    if spec.kind == "independent-binary":
        y = resp_rng.integers(0, 2, size=spec.n, dtype=np.int64)
    else:
        # The response copies X1 for the leading block and X2 for the rest.
        head = math.ceil(spec.mixture_weights[0] * spec.n)
        y = np.ascontiguousarray(np.concatenate([codes[:head, 0], codes[head:, 1]]))
    return Dataset(schema=schema, codes=codes, y=y)


def generate_sim1(n: int, seed: int) -> Dataset:
    return generate(SimSpec("sim1", n, seed))


def generate_sim2(n: int, seed: int) -> Dataset:
    return generate(SimSpec("sim2", n, seed))


def generate_sim3(n: int, seed: int) -> Dataset:
    return generate(SimSpec("sim3", n, seed))


@dataclass
class ExperimentBundle:
    spec: SimSpec
    dataset: Dataset
    forest: RandomForest
    scan: list[ScenarioReport]
    datta: DattaResult
    manifest: dict = field(default_factory=dict)


def run_experiment(
    spec: SimSpec,
    forest_params: ForestParams | None = None,
    settings: ComputeSettings | None = None,
    tau: float = 0.1,
    target_label: str = "1",
) -> ExperimentBundle:
    """Generate data, train the forest, scan all features, and run the
    flip-count measure; everything for the class ``target_label``."""
    t0 = time.perf_counter()
    forest_params = forest_params or ForestParams()
    ds = generate(spec)
    t_gen = time.perf_counter()

    forest = train_forest(ds, forest_params, seed=classifier_seed(spec.seed))
    t_train = time.perf_counter()

    engine = InfluenceEngine(ds, forest, settings)
    target = ds.schema.response_code(target_label)
    scan = engine.scenario_scan(target=target, tau=tau)
    t_scan = time.perf_counter()

    datta = datta_influence(ds, forest)
    t_end = time.perf_counter()

    modes = {row.result.mode for rep in scan for row in rep.rows}
    manifest = {
        "kind": spec.kind,
        "n": spec.n,
        "seed": spec.seed,
        "mixture_weights": list(spec.mixture_weights),
        "classifier_seed": classifier_seed(spec.seed),
        "forest": {
            "n_trees": forest_params.n_trees,
            "max_depth": forest_params.max_depth,
            "min_leaf": forest_params.min_leaf,
            "features_per_split": forest_params.features_per_split,
        },
        "target": target_label,
        "tau": tau,
        "mode": "sampled" if "sampled" in modes else "exact",
        "timings_s": {
            "generate": t_gen - t0,
            "train": t_train - t_gen,
            "scan": t_scan - t_train,
            "datta": t_end - t_scan,
            "total": t_end - t0,
        },
    }
    return ExperimentBundle(
        spec=spec, dataset=ds, forest=forest, scan=scan, datta=datta, manifest=manifest
    )


def write_bundle_inputs(bundle: ExperimentBundle, out_dir) -> dict[str, str]:
    """Write the generated schema and data files; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema_path = out / "schema.json"
    data_path = out / "dataset.csv"
    write_schema(bundle.dataset.schema, schema_path)
    write_dataset(bundle.dataset, data_path)
    return {"schema": str(schema_path), "data": str(data_path)}
