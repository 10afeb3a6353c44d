"""Coalition-game construction, caching, and exact/sampled evaluation."""

from __future__ import annotations

import math

import numpy as np
import pytest

from shapinf.classifiers import (
    Classifier,
    ConstantClassifier,
    ForestParams,
    train_forest,
    train_frequency,
)
from shapinf.errors import CapacityError, QueryError
from shapinf.game import (
    ClassEvaluator,
    CoalitionGame,
    ComputeSettings,
    DenseGame,
    baseline,
)
from shapinf.simlab import classifier_seed, generate_sim1

from util import full_grid_codes, grid_dataset, make_schema


class TableClassifier(Classifier):
    """Fixed per-assignment class-1 probabilities, for hand enumeration."""

    def __init__(self, schema, values):
        self.schema = schema
        self._values = np.asarray(values, dtype=np.float64)

    def predict_proba_batch(self, codes):
        p1 = self._values[codes @ self.schema.strides_array()]
        return np.column_stack([1.0 - p1, p1])


@pytest.fixture(scope="module")
def xor_game():
    """Frequency classifier (alpha=0) over a fully observed 2-feature grid."""
    schema = make_schema([2, 2])
    ds = grid_dataset(schema, lambda row: row[0] ^ row[1])
    clf = train_frequency(ds, alpha=0.0)
    evaluator = ClassEvaluator(clf, target=1)
    return evaluator, clf


class TestBaseline:
    def test_constant_half(self):
        schema = make_schema([2, 2])
        clf = ConstantClassifier(schema, [0.5, 0.5])
        assert baseline(clf, target=1) == 0.5

    def test_two_point_mean(self):
        schema = make_schema([2])
        clf = TableClassifier(schema, [0.2, 0.6])
        assert baseline(clf, target=1) == pytest.approx(0.4, abs=1e-15)

    def test_sim1_forest_baseline_matches_enumeration(self):
        ds = generate_sim1(1000, seed=4)
        forest = train_forest(ds, ForestParams(n_trees=100), seed=classifier_seed(4))
        value = baseline(forest, target=1)
        brute = np.mean(forest.predict_proba_batch(full_grid_codes(ds.schema))[:, 1])
        assert value == pytest.approx(float(brute), abs=1e-12)
        assert 0.4 <= value <= 0.6

    def test_capacity_error_directs_to_sampling(self):
        schema = make_schema([2, 2])
        clf = ConstantClassifier(schema, [0.5, 0.5])
        settings = ComputeSettings(table_cap=0, baseline_cap=1)
        with pytest.raises(CapacityError, match="sampled"):
            ClassEvaluator(clf, 1, settings)

    def test_shared_baseline_consistency(self, xor_game):
        evaluator, clf = xor_game
        games = [CoalitionGame(evaluator, codes) for codes in full_grid_codes(clf.schema)]
        assert len({g.baseline for g in games}) == 1
        rebuilt = ClassEvaluator(clf, target=1)
        assert rebuilt.baseline == evaluator.baseline


class TestCoalitionValue:
    def test_empty_coalition_is_zero(self, xor_game):
        evaluator, _ = xor_game
        game = CoalitionGame(evaluator, [0, 1])
        assert game.value([]) == 0.0
        assert game.value(0) == 0.0

    def test_full_coalition_is_prediction_minus_baseline(self, xor_game):
        evaluator, clf = xor_game
        for codes in full_grid_codes(clf.schema):
            game = CoalitionGame(evaluator, codes)
            expect = clf.predict_proba(codes)[1] - evaluator.baseline
            assert game.value([0, 1]) == pytest.approx(expect, abs=1e-15)

    def test_hand_enumerated_sums(self, xor_game):
        evaluator, clf = xor_game
        game = CoalitionGame(evaluator, [1, 0])
        # pin feature 0 to 1, average the two completions by hand
        hand = math.fsum(
            [clf.predict_proba([1, v])[1] for v in (0, 1)]
        ) / 2.0
        base = math.fsum(
            clf.predict_proba(c)[1] for c in full_grid_codes(clf.schema)
        ) / 4.0
        assert game.value([0]) == pytest.approx(hand - base, abs=1e-12)

    def test_constant_classifier_game_is_zero(self):
        schema = make_schema([2, 3, 2])
        clf = ConstantClassifier(schema, [0.3, 0.7])
        game = CoalitionGame(ClassEvaluator(clf, 1), [1, 2, 0])
        assert game.value(0) == 0.0
        for mask in range(1, 8):
            # means of a constant over different counts can differ by an ulp
            assert abs(game.value(mask)) <= 1e-15

    def test_value_bounds(self):
        ds = generate_sim1(300, seed=1)
        forest = train_forest(ds, ForestParams(n_trees=25), seed=1)
        evaluator = ClassEvaluator(forest, 1)
        for codes in full_grid_codes(ds.schema)[:6]:
            game = CoalitionGame(evaluator, codes)
            for mask in range(16):
                v = game.value(mask)
                assert -evaluator.baseline - 1e-12 <= v <= 1 - evaluator.baseline + 1e-12

    def test_memo_soundness_bitwise(self, xor_game):
        evaluator, _ = xor_game
        game = CoalitionGame(evaluator, [0, 1])
        first = {mask: game.value(mask) for mask in range(4)}
        game.clear_cache()
        again = {mask: game.value(mask) for mask in range(4)}
        assert first == again

    def test_streaming_matches_table_bitwise(self):
        ds = generate_sim1(200, seed=2)
        forest = train_forest(ds, ForestParams(n_trees=15), seed=2)
        with_table = ClassEvaluator(forest, 1, ComputeSettings())
        streaming = ClassEvaluator(forest, 1, ComputeSettings(table_cap=0))
        assert streaming.table is None and with_table.table is not None
        assert with_table.baseline == streaming.baseline
        codes = ds.codes[0]
        ga = CoalitionGame(with_table, codes)
        gb = CoalitionGame(streaming, codes)
        for mask in range(16):
            assert ga.value(mask) == gb.value(mask)


class TestSampled:
    def test_full_coalition_sampled_is_exact(self, xor_game):
        evaluator, clf = xor_game
        game = CoalitionGame(evaluator, [1, 1])
        exact = game.value([0, 1])
        for m in (1, 7):
            assert game.value_sampled([0, 1], m=m, seed=123) == exact

    def test_constant_classifier_sampled_is_zero(self):
        schema = make_schema([2, 2])
        clf = ConstantClassifier(schema, [0.5, 0.5])
        game = CoalitionGame(ClassEvaluator(clf, 1), [0, 0])
        for mask in range(4):
            assert abs(game.value_sampled(mask, m=16, seed=5)) <= 1e-15

    def test_sampled_converges_to_exact(self):
        ds = generate_sim1(400, seed=3)
        forest = train_forest(ds, ForestParams(n_trees=20), seed=3)
        game = CoalitionGame(ClassEvaluator(forest, 1), ds.codes[0])
        m = 1 << 14
        for mask in (0b0001, 0b0110):
            exact = game.value(mask)
            sampled = game.value_sampled(mask, m=m, seed=77)
            # probabilities live in [0, 1], so the standard error is <= 0.5/sqrt(m)
            assert abs(sampled - exact) <= 3 * 0.5 / math.sqrt(m)

    def test_sampled_deterministic_given_seed(self, xor_game):
        evaluator, _ = xor_game
        game = CoalitionGame(evaluator, [0, 1])
        a = game.value_sampled([0], m=64, seed=9)
        b = game.value_sampled([0], m=64, seed=9)
        c = game.value_sampled([0], m=64, seed=10)
        assert a == b
        assert a != c

    def test_cap_switches_to_sampling(self, xor_game):
        evaluator_exact, clf = xor_game
        settings = ComputeSettings(exact_coalition_cap=1)
        evaluator = ClassEvaluator(clf, 1, settings)
        game = CoalitionGame(evaluator, [0, 1])
        assert not game.used_sampling
        game.value([0, 1])  # no free features: still exact
        assert not game.used_sampling
        game.value([0])  # two free cells exceed the cap of 1
        assert game.used_sampling
        assert game.value(0) == 0.0  # empty coalition stays exactly zero


class TestRestriction:
    def test_scope_validation(self, xor_game):
        evaluator, _ = xor_game
        game = CoalitionGame(evaluator, [0, 1])
        with pytest.raises(QueryError):
            game.restrict([])
        with pytest.raises(QueryError):
            game.restrict([0, 5])
        restriction = game.restrict([1])
        with pytest.raises(QueryError):
            restriction.value([0])

    def test_dense_values_and_drop(self, xor_game):
        evaluator, _ = xor_game
        game = CoalitionGame(evaluator, [0, 1])
        restriction = game.restrict([0, 1])
        dense = restriction.dense_values()
        assert dense[0] == 0.0
        assert dense[3] == game.value([0, 1])
        dropped = restriction.drop(0)
        assert dropped.scope == (1,)
        assert dropped.value([1]) == game.value([1])


class TestDenseGame:
    def test_validation(self):
        with pytest.raises(ValueError):
            DenseGame([0.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            DenseGame([1.0, 2.0])

    def test_lookup(self):
        game = DenseGame([0.0, 1.0, 2.0, 4.0])
        assert game.value([0]) == 1.0
        assert game.value([0, 1]) == 4.0
