"""Command-line front end.

Subcommands: ``simulate`` (generate a benchmark, train, scan, flip-count),
``influence`` (one query), ``scan`` (all values of all scope features),
``drop`` (scan with one feature removed from the scope), and ``datta``
(the flip-count comparison measure).

Exit codes: 0 success, 2 configuration or query error, 3 data error,
4 capacity error, 5 empty subsample (the query is unanswerable from the
sample), 1 unexpected internal error. All randomness flows from explicit
``--seed`` flags; no ambient entropy is consulted.
"""

from __future__ import annotations

import argparse
import hashlib
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from . import reports as rep
from .classifiers import Classifier, ForestParams, train_forest, train_frequency
from .data import (
    Dataset,
    load_dataset,
    load_schema,
    observed_domains,
    resolve_partial,
)
from .errors import (
    CapacityError,
    DataFormatError,
    EmptySubsampleError,
    QueryError,
    SchemaError,
    ShapinfError,
    UnseenAssignmentError,
)
from .game import ComputeSettings
from .influence import InfluenceEngine, ScenarioReport
from .datta import datta_influence
from .simlab import SimSpec, run_experiment, write_bundle_inputs

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CAPACITY = 4
EXIT_EMPTY_SUBSAMPLE = 5

DEFAULT_FORMATS = "csv,json,tsv"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapinf",
        description="Shapley-value influence of categorical features on a classification response",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    io = argparse.ArgumentParser(add_help=False)
    io.add_argument("--schema", required=True, help="schema JSON file")
    io.add_argument("--data", required=True, help="dataset CSV file")
    io.add_argument(
        "--observed-domains",
        action="store_true",
        help="restrict each feature domain to the values present in the data",
    )
    io.add_argument(
        "--assignment-cap",
        type=int,
        default=1 << 24,
        help="reject schemas whose assignment space exceeds this size",
    )

    clf = argparse.ArgumentParser(add_help=False)
    clf.add_argument(
        "--classifier", choices=("forest", "frequency"), default="forest"
    )
    clf.add_argument("--trees", type=int, default=100, help="forest size")
    clf.add_argument("--max-depth", type=int, default=None)
    clf.add_argument("--min-leaf", type=int, default=1)
    clf.add_argument(
        "--alpha", type=float, default=1.0, help="frequency-classifier smoothing"
    )
    clf.add_argument("--seed", type=int, default=0, help="classifier seed")

    compute = argparse.ArgumentParser(add_help=False)
    compute.add_argument("--workers", type=int, default=1)
    compute.add_argument(
        "--exact-cap",
        type=int,
        default=ComputeSettings.exact_coalition_cap,
        help="max free-space size enumerated exactly per coalition",
    )
    compute.add_argument(
        "--sample-budget",
        type=int,
        default=ComputeSettings.sample_budget,
        help="Monte Carlo draws per sampled coalition",
    )
    compute.add_argument(
        "--table-cap",
        type=int,
        default=ComputeSettings.table_cap,
        help="max assignment-space size for the precomputed value table",
    )
    compute.add_argument(
        "--sampled",
        action="store_true",
        help="force Monte Carlo marginalization everywhere",
    )

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", help="output directory")
    out.add_argument(
        "--formats",
        default=DEFAULT_FORMATS,
        help="comma list from csv,json,tsv",
    )

    p_sim = sub.add_parser(
        "simulate", parents=[clf, compute, out],
        help="generate a benchmark dataset, train, scan, and run the flip-count measure",
    )
    p_sim.add_argument(
        "--kind", required=True,
        choices=("sim1", "sim2", "sim3", "mixture-binary", "independent-binary", "mixture-ternary"),
    )
    p_sim.add_argument("--n", type=int, default=1000)
    p_sim.add_argument("--tau", type=float, default=0.1)

    p_inf = sub.add_parser(
        "influence", parents=[io, clf, compute, out], help="one influence query"
    )
    p_inf.add_argument(
        "--fix", action="append", default=[], metavar="FEATURE=LABEL",
        help="partial assignment; repeatable",
    )
    p_inf.add_argument("--class", dest="class_label", required=True)
    p_inf.add_argument("--scope", default="all", help="'all' or comma list of features")

    p_scan = sub.add_parser(
        "scan", parents=[io, clf, compute, out], help="scan every value of the scope features"
    )
    p_scan.add_argument("--class", dest="class_label", required=True)
    p_scan.add_argument("--scope", default="all")
    p_scan.add_argument("--tau", type=float, default=0.1)

    p_drop = sub.add_parser(
        "drop", parents=[io, clf, compute, out], help="scan with one feature dropped from the scope"
    )
    p_drop.add_argument("--feature", required=True, help="feature to drop")
    p_drop.add_argument("--class", dest="class_label", required=True)
    p_drop.add_argument("--tau", type=float, default=0.1)

    p_datta = sub.add_parser(
        "datta", parents=[io, clf, out], help="flip-count influence of every feature"
    )
    p_datta.add_argument(
        "--raw", action="store_true", help="report raw counts, no normalization"
    )

    return parser


def _settings(args) -> ComputeSettings:
    if args.workers < 1:
        raise QueryError("--workers must be >= 1")
    return ComputeSettings(
        table_cap=args.table_cap,
        exact_coalition_cap=args.exact_cap,
        sample_budget=args.sample_budget,
        sample_seed=args.seed,
        force_sampled=args.sampled,
        workers=args.workers,
    )


def _formats(args) -> set[str]:
    chosen = {f.strip() for f in args.formats.split(",") if f.strip()}
    unknown = chosen - {"csv", "json", "tsv"}
    if unknown:
        raise QueryError(f"unknown format(s): {sorted(unknown)}")
    if not chosen:
        raise QueryError("--formats must name at least one format")
    return chosen


def _load_inputs(args) -> Dataset:
    schema = load_schema(args.schema, max_assignments=args.assignment_cap)
    ds = load_dataset(schema, args.data)
    if args.observed_domains:
        _, ds = observed_domains(ds)
    return ds


def _build_classifier(args, ds: Dataset) -> Classifier:
    if args.classifier == "frequency":
        if getattr(args, "sampled", False) and args.alpha == 0:
            raise QueryError(
                "--sampled draws unobserved assignments, which an alpha=0 "
                "frequency classifier rejects; smooth with --alpha > 0"
            )
        return train_frequency(ds, alpha=args.alpha)
    params = ForestParams(
        n_trees=args.trees, max_depth=args.max_depth, min_leaf=args.min_leaf
    )
    return train_forest(ds, params, seed=args.seed)


def _resolve_class(schema, label: str) -> int:
    try:
        return schema.response_code(label)
    except DataFormatError as exc:
        raise QueryError(str(exc)) from None


def _resolve_scope(schema, text: str) -> list[int] | None:
    if text == "all":
        return None
    names = [t.strip() for t in text.split(",") if t.strip()]
    if not names:
        raise QueryError("--scope must be 'all' or a comma list of feature names")
    return [schema.feature_index(name) for name in names]


def _parse_fix(schema, items: list[str]) -> dict[int, int]:
    pairs = []
    for item in items:
        name, sep, label = item.partition("=")
        if not sep:
            raise QueryError(f"--fix expects FEATURE=LABEL, got {item!r}")
        pairs.append((name.strip(), label.strip()))
    return resolve_partial(schema, pairs)


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def _base_manifest(args, command: str) -> dict:
    manifest = {
        "command": command,
        "package_version": __version__,
        "kernel_backend": _kernels.active_backend(),
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
    }
    if getattr(args, "schema", None):
        manifest["inputs"] = {
            "schema": {"path": args.schema, "sha256": _file_sha256(args.schema)},
            "data": {"path": args.data, "sha256": _file_sha256(args.data)},
        }
    if getattr(args, "classifier", None):
        manifest["classifier"] = {
            "kind": args.classifier,
            "trees": args.trees,
            "max_depth": args.max_depth,
            "min_leaf": args.min_leaf,
            "alpha": args.alpha,
        }
    return manifest


def _validate_scan(reports: list[ScenarioReport], classifier: Classifier) -> None:
    """Self-check before declaring success: efficiency on every row and a
    probability-simplex spot check on the classifier."""
    for report in reports:
        for row in report.rows:
            res = row.result
            tol = 1e-9 if res.mode == "exact" else 1e-7
            if abs(res.efficiency_gap()) > tol:
                raise ShapinfError(
                    f"report failed the efficiency self-check on feature "
                    f"{report.feature} value {row.value}"
                )
    rng = np.random.default_rng(0)
    sizes = classifier.schema.sizes_array()
    probe = rng.integers(0, sizes, size=(32, classifier.schema.k), dtype=np.int64)
    probs = classifier.predict_proba_batch(probe)
    if (probs < -1e-12).any() or np.abs(probs.sum(axis=1) - 1.0).max() > 1e-9:
        raise ShapinfError("classifier output failed the simplex self-check")


def _write_scan_outputs(out_dir: Path, schema, reports, formats: set[str]) -> None:
    if "csv" in formats:
        rep.atomic_write_text(out_dir / "scan.csv", rep.scan_csv(schema, reports))
        rep.atomic_write_text(
            out_dir / "scan_breakdown.csv", rep.scan_breakdown_csv(schema, reports)
        )
    if "json" in formats:
        rep.atomic_write_text(out_dir / "scan.json", rep.scan_json(schema, reports))
    if "tsv" in formats:
        for report in reports:
            name = schema.feature_names[report.feature]
            rep.atomic_write_text(
                out_dir / f"plot_{name}.tsv", rep.plot_tsv(schema, report)
            )


def _cmd_simulate(args) -> int:
    formats = _formats(args)
    if not args.out:
        raise QueryError("simulate requires --out")
    settings = _settings(args)
    spec = SimSpec(kind=args.kind, n=args.n, seed=args.seed)
    params = ForestParams(
        n_trees=args.trees, max_depth=args.max_depth, min_leaf=args.min_leaf
    )
    t0 = time.perf_counter()
    bundle = run_experiment(spec, params, settings, tau=args.tau)
    _validate_scan(bundle.scan, bundle.forest)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = write_bundle_inputs(bundle, out_dir)
    schema = bundle.dataset.schema
    _write_scan_outputs(out_dir, schema, bundle.scan, formats)
    if "csv" in formats:
        rep.atomic_write_text(out_dir / "datta.csv", rep.datta_csv(schema, bundle.datta))
    if "json" in formats:
        rep.atomic_write_text(out_dir / "datta.json", rep.datta_json(schema, bundle.datta))

    manifest = _base_manifest(args, "simulate")
    manifest.update(bundle.manifest)
    manifest["outputs"] = inputs
    manifest["wall_clock_s"] = time.perf_counter() - t0
    rep.atomic_write_text(out_dir / "manifest.json", rep.manifest_json(manifest))
    return EXIT_OK


def _cmd_influence(args) -> int:
    formats = _formats(args)
    ds = _load_inputs(args)
    schema = ds.schema
    classifier = _build_classifier(args, ds)
    engine = InfluenceEngine(ds, classifier, _settings(args))
    t0 = time.perf_counter()
    result = engine.influence(
        _parse_fix(schema, args.fix),
        _resolve_class(schema, args.class_label),
        _resolve_scope(schema, args.scope),
    )
    sys.stdout.write(rep.influence_json(schema, result))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if "json" in formats:
            rep.atomic_write_text(
                out_dir / "influence.json", rep.influence_json(schema, result)
            )
        if "csv" in formats:
            rep.atomic_write_text(
                out_dir / "influence.csv", rep.influence_csv(schema, result)
            )
        manifest = _base_manifest(args, "influence")
        manifest.update(
            {
                "fix": args.fix,
                "class": args.class_label,
                "scope": args.scope,
                "mode": result.mode,
                "wall_clock_s": time.perf_counter() - t0,
            }
        )
        rep.atomic_write_text(out_dir / "manifest.json", rep.manifest_json(manifest))
    return EXIT_OK


def _run_scan_command(args, scope_resolver, command: str, extra_manifest) -> int:
    formats = _formats(args)
    if not args.out:
        raise QueryError(f"{command} requires --out")
    ds = _load_inputs(args)
    schema = ds.schema
    classifier = _build_classifier(args, ds)
    engine = InfluenceEngine(ds, classifier, _settings(args))
    target = _resolve_class(schema, args.class_label)
    t0 = time.perf_counter()
    reports = engine.scenario_scan(
        target=target, scope=scope_resolver(schema), tau=args.tau
    )
    _validate_scan(reports, classifier)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_scan_outputs(out_dir, schema, reports, formats)
    manifest = _base_manifest(args, command)
    modes = {row.result.mode for rp in reports for row in rp.rows}
    manifest.update(
        {
            "class": args.class_label,
            "tau": args.tau,
            "mode": "sampled" if "sampled" in modes else "exact",
            "wall_clock_s": time.perf_counter() - t0,
        }
    )
    manifest.update(extra_manifest)
    rep.atomic_write_text(out_dir / "manifest.json", rep.manifest_json(manifest))
    return EXIT_OK


def _cmd_scan(args) -> int:
    return _run_scan_command(
        args, lambda schema: _resolve_scope(schema, args.scope), "scan",
        {"scope": args.scope},
    )


def _cmd_drop(args) -> int:
    def scope_resolver(schema):
        dropped = schema.feature_index(args.feature)
        if schema.k < 2:
            raise QueryError("dropping a feature needs at least two features")
        return [j for j in range(schema.k) if j != dropped]

    return _run_scan_command(args, scope_resolver, "drop", {"dropped": args.feature})


def _cmd_datta(args) -> int:
    formats = _formats(args)
    if not args.out:
        raise QueryError("datta requires --out")
    ds = _load_inputs(args)
    schema = ds.schema
    classifier = _build_classifier(args, ds)
    t0 = time.perf_counter()
    result = datta_influence(ds, classifier, normalize=not args.raw)
    if (result.raw_counts < 0).any() or (result.raw_counts % 2 != 0).any():
        # every flip is counted once per direction, so counts are even
        raise ShapinfError("flip counts failed the pair-symmetry self-check")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if "csv" in formats:
        rep.atomic_write_text(out_dir / "datta.csv", rep.datta_csv(schema, result))
    if "json" in formats:
        rep.atomic_write_text(out_dir / "datta.json", rep.datta_json(schema, result))
    manifest = _base_manifest(args, "datta")
    manifest.update(
        {
            "normalize": not args.raw,
            "observed_set_size": result.observed_set_size,
            "wall_clock_s": time.perf_counter() - t0,
        }
    )
    rep.atomic_write_text(out_dir / "manifest.json", rep.manifest_json(manifest))
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "influence": _cmd_influence,
    "scan": _cmd_scan,
    "drop": _cmd_drop,
    "datta": _cmd_datta,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except EmptySubsampleError as exc:
        print(f"shapinf: empty subsample: {exc}", file=sys.stderr)
        print(
            "shapinf: the sample contains no matching rows; the query is "
            "unanswerable from this data",
            file=sys.stderr,
        )
        return EXIT_EMPTY_SUBSAMPLE
    except QueryError as exc:
        print(f"shapinf: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnseenAssignmentError as exc:
        print(
            f"shapinf: configuration error: {exc}; influence queries "
            f"marginalize over unobserved assignments, so an unsmoothed "
            f"frequency classifier needs --alpha > 0 unless the data covers "
            f"the whole assignment space",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    except (SchemaError, DataFormatError) as exc:
        print(f"shapinf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CapacityError as exc:
        print(f"shapinf: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ShapinfError as exc:
        print(f"shapinf: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
