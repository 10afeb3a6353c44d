"""Report serialization: CSV, JSON, and per-figure plot TSV.

All writers are deterministic byte for byte given the same inputs: floats
are rendered with repr (shortest round-trip), JSON keys are sorted, and
files are written atomically (temp file + rename) so interrupted runs
never leave truncated reports behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable

from .data import FeatureSchema
from .datta import DattaResult
from .influence import InfluenceResult, ScenarioReport


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv_line(cells: Iterable[str]) -> str:
    # Values here are labels from validated schemas plus numbers; quoting is
    # needed only if a label carries a comma or quote.
    out = []
    for cell in cells:
        if any(ch in cell for ch in ',"\n\r'):
            cell = '"' + cell.replace('"', '""') + '"'
        out.append(cell)
    return ",".join(out) + "\r\n"


def _scan_row_dict(schema: FeatureSchema, report: ScenarioReport, row) -> dict:
    j = report.feature
    res: InfluenceResult = row.result
    return {
        "feature": schema.feature_names[j],
        "value": schema.feature_domains[j][row.value],
        "influence": res.per_feature[j],
        "per_feature": {
            schema.feature_names[l]: res.per_feature[l] for l in report.scope
        },
        "total": res.total,
        "n_sub": res.n_sub,
        "mode": res.mode,
        "flagged": row.value in report.flagged,
    }


def scan_csv(schema: FeatureSchema, reports: list[ScenarioReport]) -> str:
    """Rows of (feature, value) cells: the shape of the headline tables."""
    lines = [_csv_line(["feature", "value", "n_sub", "influence", "total", "flagged"])]
    for report in reports:
        j = report.feature
        for row in report.rows:
            res = row.result
            lines.append(
                _csv_line(
                    [
                        schema.feature_names[j],
                        schema.feature_domains[j][row.value],
                        str(res.n_sub),
                        _fmt(res.per_feature[j]),
                        _fmt(res.total),
                        "true" if row.value in report.flagged else "false",
                    ]
                )
            )
    return "".join(lines)


def scan_breakdown_csv(schema: FeatureSchema, reports: list[ScenarioReport]) -> str:
    """One row per scanned (feature, value) scenario, one column per scope
    feature: the multi-feature breakdown shape."""
    if not reports:
        return ""
    scope = reports[0].scope
    header = (
        ["feature", "value", "n_sub"]
        + [schema.feature_names[l] for l in scope]
        + ["total", "flagged"]
    )
    lines = [_csv_line(header)]
    for report in reports:
        j = report.feature
        for row in report.rows:
            res = row.result
            lines.append(
                _csv_line(
                    [
                        schema.feature_names[j],
                        schema.feature_domains[j][row.value],
                        str(res.n_sub),
                    ]
                    + [_fmt(res.per_feature[l]) for l in scope]
                    + [
                        _fmt(res.total),
                        "true" if row.value in report.flagged else "false",
                    ]
                )
            )
    return "".join(lines)


def scan_json(schema: FeatureSchema, reports: list[ScenarioReport]) -> str:
    doc = {
        "target": schema.response_domain[reports[0].target] if reports else None,
        "scope": [schema.feature_names[l] for l in reports[0].scope] if reports else [],
        "tau": reports[0].tau if reports else None,
        "features": [
            {
                "feature": schema.feature_names[rep.feature],
                "rows": [_scan_row_dict(schema, rep, row) for row in rep.rows],
                "absent_values": [
                    schema.feature_domains[rep.feature][v] for v in rep.absent
                ],
                "flagged_values": [
                    schema.feature_domains[rep.feature][v] for v in rep.flagged
                ],
            }
            for rep in reports
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def plot_tsv(schema: FeatureSchema, report: ScenarioReport) -> str:
    """Numeric series behind one figure: x = value, influence and total."""
    j = report.feature
    lines = ["value\tinfluence\ttotal\n"]
    for row in report.rows:
        res = row.result
        lines.append(
            f"{schema.feature_domains[j][row.value]}\t"
            f"{_fmt(res.per_feature[j])}\t{_fmt(res.total)}\n"
        )
    return "".join(lines)


def influence_json(schema: FeatureSchema, result: InfluenceResult) -> str:
    query = result.query
    doc = {
        "fixed": {
            schema.feature_names[j]: schema.feature_domains[j][c]
            for j, c in query.fixed
        },
        "target": schema.response_domain[query.target],
        "scope": [schema.feature_names[l] for l in query.scope],
        "per_feature": {
            schema.feature_names[l]: result.per_feature[l] for l in query.scope
        },
        "total": result.total,
        "n_sub": result.n_sub,
        "mode": result.mode,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def influence_csv(schema: FeatureSchema, result: InfluenceResult) -> str:
    scope_names = [schema.feature_names[l] for l in result.query.scope]
    header = ["fixed", "target", "n_sub", "mode"] + scope_names + ["total"]
    fixed = ";".join(
        f"{schema.feature_names[j]}={schema.feature_domains[j][c]}"
        for j, c in result.query.fixed
    )
    row = (
        [fixed, schema.response_domain[result.query.target], str(result.n_sub), result.mode]
        + [_fmt(result.per_feature[l]) for l in result.query.scope]
        + [_fmt(result.total)]
    )
    return _csv_line(header) + _csv_line(row)


def datta_csv(schema: FeatureSchema, result: DattaResult) -> str:
    lines = [_csv_line(["feature", "raw_count", "value", "divisor"])]
    for j, name in enumerate(schema.feature_names):
        lines.append(
            _csv_line(
                [
                    name,
                    str(int(result.raw_counts[j])),
                    _fmt(result.values[j]),
                    str(result.normalization),
                ]
            )
        )
    return "".join(lines)


def datta_json(schema: FeatureSchema, result: DattaResult) -> str:
    doc = {
        "values": {
            name: float(result.values[j])
            for j, name in enumerate(schema.feature_names)
        },
        "raw_counts": {
            name: int(result.raw_counts[j])
            for j, name in enumerate(schema.feature_names)
        },
        "normalization": result.normalization,
        "observed_set_size": result.observed_set_size,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def manifest_json(manifest: dict) -> str:
    return json.dumps(manifest, sort_keys=True, indent=2) + "\n"
