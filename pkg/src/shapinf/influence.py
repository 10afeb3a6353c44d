"""The influence measure: subsample-averaged Shapley vectors.

For a query (partial assignment a_R, class b, scope T), the influence of a
feature in T is the average of its Shapley value over the per-instance
coalition games of the rows matching (a_R, b). The total influence is the
direct average of the games' full-scope worth, and must agree with the sum
of the per-feature values (the efficiency identity); the engine checks
that on every query.

Identical instance vectors yield identical games, so Shapley vectors are
computed once per distinct vector and averaged with multiplicities. The
averaging itself uses exactly rounded sums over the expanded member list,
which makes the result independent of deduplication and of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .classifiers import Classifier
from .data import Dataset, Subsample, subsample
from .errors import EmptySubsampleError, QueryError, ShapinfError
from .game import ClassEvaluator, CoalitionGame, ComputeSettings
from .shapley import ShapleyVector, shapley

EFFICIENCY_TOL_EXACT = 1e-9
EFFICIENCY_TOL_SAMPLED = 1e-7


@dataclass(frozen=True)
class InfluenceQuery:
    """A (partial assignment, target class, scope) triple, in codes."""

    fixed: tuple[tuple[int, int], ...]
    target: int
    scope: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class InfluenceResult:
    query: InfluenceQuery
    per_feature: dict[int, float]
    total: float
    n_sub: int
    mode: str  # "exact" | "sampled"

    def shapley_sum(self) -> float:
        return math.fsum(self.per_feature[j] for j in self.query.scope)

    def efficiency_gap(self) -> float:
        return self.total - self.shapley_sum()


@dataclass
class ScenarioRow:
    value: int
    result: InfluenceResult


@dataclass
class ScenarioReport:
    """One scanned feature: influence of each of its values on the class."""

    feature: int
    target: int
    scope: tuple[int, ...]
    tau: float
    rows: list[ScenarioRow] = field(default_factory=list)
    absent: tuple[int, ...] = ()  # values with no matching rows, never zeros
    flagged: tuple[int, ...] = ()  # values whose |total| reaches tau


class InfluenceEngine:
    """Shared caches for influence computations over one dataset/classifier.

    Evaluators (value table + baseline) are built once per target class;
    per-instance games and Shapley vectors are cached across queries, which
    turns a scan into one game per distinct instance vector. The engine is
    driven from one orchestrating thread; workers only evaluate disjoint
    games in parallel.
    """

    def __init__(self, ds: Dataset, classifier: Classifier, settings: ComputeSettings | None = None):
        if classifier.schema is not ds.schema and classifier.schema != ds.schema:
            raise QueryError("classifier and dataset use different schemas")
        self.ds = ds
        self.classifier = classifier
        self.settings = settings or ComputeSettings()
        self._evaluators: dict[int, ClassEvaluator] = {}
        self._games: dict[tuple[int, int], CoalitionGame] = {}
        self._shapvecs: dict[tuple[int, int, tuple[int, ...]], ShapleyVector] = {}

    # -- shared building blocks -------------------------------------------

    def evaluator(self, target: int) -> ClassEvaluator:
        target = int(target)
        ev = self._evaluators.get(target)
        if ev is None:
            ev = ClassEvaluator(self.classifier, target, self.settings)
            self._evaluators[target] = ev
        return ev

    def baseline(self, target: int) -> float:
        return self.evaluator(target).baseline

    def _game(self, assignment_index: int, codes: np.ndarray, target: int) -> CoalitionGame:
        key = (int(assignment_index), int(target))
        game = self._games.get(key)
        if game is None:
            game = CoalitionGame(self.evaluator(target), codes)
            self._games[key] = game
        return game

    def _full_scope(self) -> tuple[int, ...]:
        return tuple(range(self.ds.schema.k))

    def _normalize_scope(self, scope: Iterable[int] | None) -> tuple[int, ...]:
        if scope is None:
            return self._full_scope()
        members = tuple(sorted(set(int(j) for j in scope)))
        if not members:
            raise QueryError("scope must be nonempty")
        for j in members:
            if not 0 <= j < self.ds.schema.k:
                raise QueryError(f"feature index {j} out of range")
        return members

    def _subsample_or_raise(self, fixed: Mapping[int, int], target: int) -> Subsample:
        sub = subsample(self.ds, fixed, target)
        if sub.size == 0:
            schema = self.ds.schema
            raise EmptySubsampleError(
                {
                    schema.feature_names[j]: schema.feature_domains[j][c]
                    for j, c in fixed.items()
                },
                schema.response_domain[int(target)],
            )
        return sub

    def _shapley_vectors(
        self, sub: Subsample, target: int, scope: tuple[int, ...]
    ) -> list[ShapleyVector]:
        """Shapley vector per distinct member vector, cache-backed."""
        uniq, _ = sub.distinct
        codes = sub.distinct_codes()
        games = [
            self._game(idx, codes[pos], target) for pos, idx in enumerate(uniq)
        ]
        missing = [
            pos
            for pos, idx in enumerate(uniq)
            if (int(idx), int(target), scope) not in self._shapvecs
        ]

        def compute(pos: int) -> ShapleyVector:
            return shapley(
                games[pos].restrict(scope), max_players=self.settings.max_players
            )

        if self.settings.workers > 1 and len(missing) > 1:
            with ThreadPoolExecutor(max_workers=self.settings.workers) as pool:
                fresh = list(pool.map(compute, missing))
        else:
            fresh = [compute(pos) for pos in missing]
        for pos, vec in zip(missing, fresh):
            self._shapvecs[(int(uniq[pos]), int(target), scope)] = vec
        return [self._shapvecs[(int(idx), int(target), scope)] for idx in uniq]

    @staticmethod
    def _member_mean(values: Iterable[float], counts: np.ndarray, n: int) -> float:
        """Exactly rounded mean over the member multiset.

        Expanding multiplicities and using fsum makes the result identical
        with and without deduplication, in any order.
        """
        return (
            math.fsum(v for v, c in zip(values, counts) for _ in range(int(c))) / n
        )

    # -- the measure -------------------------------------------------------

    def influence(
        self,
        fixed: Mapping[int, int],
        target: int,
        scope: Iterable[int] | None = None,
    ) -> InfluenceResult:
        """Per-feature influence and total influence for one query."""
        scope = self._normalize_scope(scope)
        sub = self._subsample_or_raise(fixed, target)
        uniq, counts = sub.distinct
        n = sub.size

        vectors = self._shapley_vectors(sub, target, scope)
        per_feature = {
            j: self._member_mean((vec[j] for vec in vectors), counts, n)
            for j in scope
        }

        scope_mask = 0
        for j in scope:
            scope_mask |= 1 << j
        games = [self._games[(int(idx), int(target))] for idx in uniq]
        total = self._member_mean((g.value(scope_mask) for g in games), counts, n)

        mode = "sampled" if any(g.used_sampling for g in games) else "exact"
        result = InfluenceResult(
            query=InfluenceQuery(
                fixed=tuple(sorted((int(j), int(c)) for j, c in fixed.items())),
                target=int(target),
                scope=scope,
            ),
            per_feature=per_feature,
            total=total,
            n_sub=n,
            mode=mode,
        )
        tol = EFFICIENCY_TOL_EXACT if mode == "exact" else EFFICIENCY_TOL_SAMPLED
        gap = abs(result.efficiency_gap())
        if gap > tol:
            raise ShapinfError(
                f"internal efficiency check failed: |total - shapley sum| = {gap:g}"
            )
        return result

    def total_influence(
        self,
        fixed: Mapping[int, int],
        target: int,
        scope: Iterable[int] | None = None,
    ) -> float:
        """Direct evaluation of the total influence, without Shapley values.

        Averages the games' full-scope worth over the subsample; equals the
        per-feature sum of :meth:`influence` up to float noise.
        """
        scope = self._normalize_scope(scope)
        sub = self._subsample_or_raise(fixed, target)
        uniq, counts = sub.distinct
        codes = sub.distinct_codes()
        scope_mask = 0
        for j in scope:
            scope_mask |= 1 << j
        worths = (
            self._game(idx, codes[pos], target).value(scope_mask)
            for pos, idx in enumerate(uniq)
        )
        return self._member_mean(worths, counts, sub.size)

    # -- scans ---------------------------------------------------------------

    def scenario_scan(
        self,
        target: int,
        scope: Iterable[int] | None = None,
        tau: float = 0.1,
        scan_features: Iterable[int] | None = None,
    ) -> list[ScenarioReport]:
        """Influence of every value of every scanned feature on the class.

        Cells whose subsample is empty are reported as absent rather than
        zero. A value is flagged when the magnitude of its total influence
        reaches ``tau``.
        """
        if tau < 0:
            raise QueryError("tau must be >= 0")
        scope = self._normalize_scope(scope)
        features = self._normalize_scope(scan_features) if scan_features is not None else scope
        reports = []
        for j in features:
            report = ScenarioReport(feature=j, target=int(target), scope=scope, tau=tau)
            absent = []
            for v in range(self.ds.schema.sizes[j]):
                try:
                    result = self.influence({j: v}, target, scope)
                except EmptySubsampleError:
                    absent.append(v)
                    continue
                report.rows.append(ScenarioRow(value=v, result=result))
            report.absent = tuple(absent)
            report.flagged = tuple(
                row.value for row in report.rows if abs(row.result.total) >= tau
            )
            reports.append(report)
        return reports

    def feature_drop_analysis(
        self, target: int, drop: int, tau: float = 0.1
    ) -> list[ScenarioReport]:
        """Scan with one feature removed from the scope.

        The games are unchanged (they always live on the full feature set);
        only the restriction scope shrinks, so dependencies absorbed by the
        dropped feature get redistributed.
        """
        k = self.ds.schema.k
        if k < 2:
            raise QueryError("dropping a feature needs at least two features")
        drop = int(drop)
        if not 0 <= drop < k:
            raise QueryError(f"feature index {drop} out of range")
        scope = tuple(j for j in range(k) if j != drop)
        return self.scenario_scan(target, scope, tau)


def influence(
    ds: Dataset,
    classifier: Classifier,
    fixed: Mapping[int, int],
    target: int,
    scope: Iterable[int] | None = None,
    settings: ComputeSettings | None = None,
) -> InfluenceResult:
    """One-shot influence query without keeping an engine around."""
    return InfluenceEngine(ds, classifier, settings).influence(fixed, target, scope)
