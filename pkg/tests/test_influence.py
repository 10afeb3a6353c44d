"""The influence measure: averaging, axioms, scans, and drop analysis."""

from __future__ import annotations

import math

import numpy as np
import pytest

from shapinf.classifiers import (
    ConstantClassifier,
    FeatureBlindClassifier,
    ForestParams,
    train_forest,
    train_frequency,
)
from shapinf.data import Dataset
from shapinf.errors import EmptySubsampleError, QueryError
from shapinf.game import ClassEvaluator, CoalitionGame, ComputeSettings
from shapinf.influence import InfluenceEngine, influence
from shapinf.shapley import shapley
from shapinf.simlab import classifier_seed, generate_sim1, generate_sim3

from util import grid_dataset, make_schema, random_dataset, random_query


@pytest.fixture(scope="module")
def sim1_engine():
    ds = generate_sim1(400, seed=4)
    forest = train_forest(ds, ForestParams(n_trees=40), seed=classifier_seed(4))
    return InfluenceEngine(ds, forest)


class TestInfluenceBasics:
    def test_constant_classifier_all_zero(self):
        schema = make_schema([2, 2, 2])
        ds = grid_dataset(schema, lambda row: row[0])
        clf = ConstantClassifier(schema, [0.4, 0.6])
        result = influence(ds, clf, {}, target=1)
        assert all(abs(v) <= 1e-15 for v in result.per_feature.values())
        assert abs(result.total) <= 1e-15
        assert result.mode == "exact"

    def test_single_instance_full_scope(self):
        schema = make_schema([2, 2])
        # exactly one row with class 1
        codes = np.array([[0, 0], [0, 1], [1, 0]], dtype=np.int64)
        ds = Dataset(schema=schema, codes=codes, y=np.array([0, 0, 1], dtype=np.int64))
        clf = train_frequency(ds, alpha=1.0)
        engine = InfluenceEngine(ds, clf)
        result = engine.influence({}, target=1)
        expect = clf.predict_proba([1, 0])[1] - engine.baseline(1)
        assert result.n_sub == 1
        assert result.total == pytest.approx(expect, abs=1e-15)
        assert result.shapley_sum() == pytest.approx(expect, abs=1e-9)

    def test_empty_subsample_raises_with_context(self):
        schema = make_schema([2, 2])
        codes = np.array([[0, 0], [1, 1]], dtype=np.int64)
        ds = Dataset(schema=schema, codes=codes, y=np.array([0, 1], dtype=np.int64))
        engine = InfluenceEngine(ds, train_frequency(ds, alpha=1.0))
        with pytest.raises(EmptySubsampleError) as err:
            engine.influence({0: 0}, target=1)  # F0=0 only occurs with class 0
        assert "no rows" in str(err.value)
        assert "F0" in str(err.value)

    def test_scope_validation(self, sim1_engine):
        with pytest.raises(QueryError):
            sim1_engine.influence({}, target=1, scope=[])
        with pytest.raises(QueryError):
            sim1_engine.influence({}, target=1, scope=[9])

    def test_r_may_overlap_or_avoid_scope(self, sim1_engine):
        inside = sim1_engine.influence({0: 1}, target=1, scope=[0, 1])
        outside = sim1_engine.influence({2: 0}, target=1, scope=[0, 1])
        assert set(inside.per_feature) == {0, 1}
        assert set(outside.per_feature) == {0, 1}


class TestAveraging:
    def test_dedup_invariance_to_the_last_bit(self):
        rng = np.random.default_rng(3)
        schema = make_schema([2, 3])
        # heavy duplication on purpose
        codes = rng.integers(0, [2, 3], size=(60, 2)).astype(np.int64)
        y = rng.integers(0, 2, size=60).astype(np.int64)
        ds = Dataset(schema=schema, codes=codes, y=y)
        clf = train_frequency(ds, alpha=1.0)
        engine = InfluenceEngine(ds, clf)
        scope = (0, 1)
        result = engine.influence({}, target=1, scope=scope)

        # brute force: one fresh game per member row, no deduplication
        evaluator = ClassEvaluator(clf, 1)
        members = np.flatnonzero(ds.y == 1)
        vecs = [
            shapley(CoalitionGame(evaluator, ds.codes[i]).restrict(scope))
            for i in members
        ]
        for j in scope:
            brute = math.fsum(vec[j] for vec in vecs) / len(members)
            assert result.per_feature[j] == brute

    def test_total_influence_matches_shapley_sum(self, sim1_engine):
        for fixed in ({}, {0: 1}, {1: 0}, {2: 1}):
            result = sim1_engine.influence(fixed, target=1)
            direct = sim1_engine.total_influence(fixed, target=1)
            assert direct == result.total
            assert abs(direct - result.shapley_sum()) <= 1e-9


class TestAxiomsOnData:
    def test_efficiency_and_balanced_contributions_random(self):
        rng = np.random.default_rng(99)
        for _ in range(25):
            ds = random_dataset(rng)
            clf = train_frequency(ds, alpha=1.0)
            engine = InfluenceEngine(ds, clf)
            fixed, target, scope = random_query(rng, ds)
            result = engine.influence(fixed, target, scope)
            assert abs(result.efficiency_gap()) <= 1e-9
            if len(scope) >= 2:
                l, m = scope[0], scope[-1]
                lhs = result.per_feature[l] - engine.influence(
                    fixed, target, [j for j in scope if j != m]
                ).per_feature[l]
                rhs = result.per_feature[m] - engine.influence(
                    fixed, target, [j for j in scope if j != l]
                ).per_feature[m]
                assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_dummy_feature_zero(self):
        ds = generate_sim1(200, seed=6)
        forest = train_forest(ds, ForestParams(n_trees=20), seed=1)
        blind = FeatureBlindClassifier(forest, blind=[3])
        engine = InfluenceEngine(ds, blind)
        for j in range(4):
            for v in (0, 1):
                try:
                    result = engine.influence({j: v}, target=1)
                except EmptySubsampleError:
                    continue
                assert abs(result.per_feature[3]) <= 1e-12


class TestScan:
    def test_flag_semantics_follow_threshold(self, sim1_engine):
        tau = 0.25
        reports = sim1_engine.scenario_scan(target=1, tau=tau)
        assert len(reports) == 4
        for report in reports:
            for row in report.rows:
                flagged = row.value in report.flagged
                assert flagged == (abs(row.result.total) >= tau)

    def test_strong_cells_flagged_first(self, sim1_engine):
        # the mixture features at value 1 carry the largest totals
        reports = sim1_engine.scenario_scan(target=1, tau=0.1)
        totals = {
            (rep.feature, row.value): row.result.total
            for rep in reports
            for row in rep.rows
        }
        top_two = sorted(totals, key=lambda key: -totals[key])[:2]
        assert set(top_two) == {(0, 1), (1, 1)}
        for rep in reports:
            if rep.feature in (0, 1):
                assert 1 in rep.flagged

    def test_constant_classifier_flags_nothing(self):
        schema = make_schema([2, 2])
        ds = grid_dataset(schema, lambda row: row[0])
        clf = ConstantClassifier(schema, [0.5, 0.5])
        reports = InfluenceEngine(ds, clf).scenario_scan(target=1, tau=0.01)
        assert all(rep.flagged == () for rep in reports)

    def test_absent_cells_reported_not_zeroed(self):
        schema = make_schema([2, 2])
        codes = np.array([[0, 0], [0, 1], [1, 1]], dtype=np.int64)
        ds = Dataset(schema=schema, codes=codes, y=np.array([1, 1, 0], dtype=np.int64))
        clf = train_frequency(ds, alpha=1.0)
        reports = InfluenceEngine(ds, clf).scenario_scan(target=1, tau=0.1)
        by_feature = {rep.feature: rep for rep in reports}
        # X0=1 only occurs with class 0, so the class-1 cell is absent
        assert by_feature[0].absent == (1,)
        assert [row.value for row in by_feature[0].rows] == [0]

    def test_workers_do_not_change_results(self):
        ds = generate_sim1(300, seed=8)
        forest = train_forest(ds, ForestParams(n_trees=25), seed=2)
        serial = InfluenceEngine(ds, forest, ComputeSettings(workers=1))
        threaded = InfluenceEngine(ds, forest, ComputeSettings(workers=4))
        rs = serial.scenario_scan(target=1, tau=0.1)
        rt = threaded.scenario_scan(target=1, tau=0.1)
        for a, b in zip(rs, rt):
            for ra, rb in zip(a.rows, b.rows):
                assert ra.result.per_feature == rb.result.per_feature
                assert ra.result.total == rb.result.total

    def test_sampled_mode_is_reported_and_efficiency_holds(self):
        ds = generate_sim1(200, seed=9)
        forest = train_forest(ds, ForestParams(n_trees=15), seed=3)
        engine = InfluenceEngine(
            ds, forest, ComputeSettings(exact_coalition_cap=1, sample_budget=512)
        )
        result = engine.influence({0: 1}, target=1)
        assert result.mode == "sampled"
        assert abs(result.efficiency_gap()) <= 1e-7

    def test_force_sampled_pipeline(self):
        # everything Monte Carlo, including the baseline
        ds = generate_sim1(150, seed=9)
        forest = train_forest(ds, ForestParams(n_trees=10), seed=3)
        settings = ComputeSettings(force_sampled=True, sample_budget=2048, sample_seed=1)
        engine = InfluenceEngine(ds, forest, settings)
        exact = InfluenceEngine(ds, forest).influence({0: 1}, target=1)
        result = engine.influence({0: 1}, target=1)
        assert result.mode == "sampled"
        assert abs(result.efficiency_gap()) <= 1e-7
        # a coarse estimate still lands near the exact values
        for j in range(4):
            assert result.per_feature[j] == pytest.approx(
                exact.per_feature[j], abs=0.1
            )
        again = InfluenceEngine(ds, forest, settings).influence({0: 1}, target=1)
        assert again.per_feature == result.per_feature


class TestDropAnalysis:
    def test_two_feature_drop_reduces_to_totals(self):
        schema = make_schema([2, 2])
        ds = grid_dataset(schema, lambda row: row[0] ^ row[1])
        clf = train_frequency(ds, alpha=1.0)
        engine = InfluenceEngine(ds, clf)
        reports = engine.feature_drop_analysis(target=1, drop=1)
        assert [rep.feature for rep in reports] == [0]
        for row in reports[0].rows:
            assert row.result.per_feature[0] == row.result.total

    def test_dropping_a_noise_feature_changes_little(self, sim1_engine):
        full = {
            (rep.feature, row.value): row.result.per_feature[rep.feature]
            for rep in sim1_engine.scenario_scan(target=1)
            for row in rep.rows
        }
        dropped = {
            (rep.feature, row.value): row.result.per_feature[rep.feature]
            for rep in sim1_engine.feature_drop_analysis(target=1, drop=3)
            for row in rep.rows
        }
        for key, value in dropped.items():
            assert abs(value - full[key]) <= 0.05

    def test_dropping_an_independent_mixture_feature_changes_little(self):
        # the mixture response makes the fitted probabilities additive in the
        # features, so removing one from scope leaves the rest nearly as is
        ds = generate_sim3(1000, seed=4)
        forest = train_forest(ds, ForestParams(n_trees=60), seed=classifier_seed(4))
        engine = InfluenceEngine(ds, forest)
        full = engine.influence({0: 1}, target=1)
        dropped = engine.influence({0: 1}, target=1, scope=[0, 2, 3])
        assert abs(dropped.per_feature[0] - full.per_feature[0]) <= 0.05

    def test_dropping_a_partner_feature_redistributes_interaction(self):
        # Dropping a feature from the scope moves half of the mean
        # interaction term out of the remaining feature's credit, so the
        # direction of the shift follows the sign of the conditional mean
        # interaction: complements lose, substitutes gain.
        schema = make_schema([2, 2, 2])

        and_ds = grid_dataset(schema, lambda row: row[0] & row[1])
        engine = InfluenceEngine(and_ds, train_frequency(and_ds, alpha=0.0))
        full = engine.influence({}, target=1)  # members all have F0=F1=1
        dropped = engine.influence({}, target=1, scope=[0, 2])
        assert dropped.per_feature[0] < full.per_feature[0] - 0.05

        or_ds = grid_dataset(schema, lambda row: row[0] | row[1])
        engine = InfluenceEngine(or_ds, train_frequency(or_ds, alpha=0.0))
        full = engine.influence({0: 1, 1: 1}, target=1)
        dropped = engine.influence({0: 1, 1: 1}, target=1, scope=[0, 2])
        assert dropped.per_feature[0] > full.per_feature[0] + 0.05

    def test_drop_requires_two_features(self):
        schema = make_schema([2])
        ds = grid_dataset(schema, lambda row: row[0])
        clf = train_frequency(ds, alpha=1.0)
        with pytest.raises(QueryError):
            InfluenceEngine(ds, clf).feature_drop_analysis(target=1, drop=0)
