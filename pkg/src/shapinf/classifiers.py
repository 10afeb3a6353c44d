"""Classifiers over categorical feature spaces.

Two trained implementations share one contract: map any full feature
assignment to a probability distribution over the response classes, and be
deterministic after training. The smoothed frequency table is exact and
closed-form, which makes it the oracle of choice in tests; the random
forest is the experiment engine.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeatureSchema
from .errors import DataFormatError, UnseenAssignmentError

PREDICT_CHUNK = 4096


class Classifier(abc.ABC):
    """Behavioral contract: ``predict_proba`` over full assignments."""

    schema: FeatureSchema

    @abc.abstractmethod
    def predict_proba_batch(self, codes: np.ndarray) -> np.ndarray:
        """Class-probability rows for an (n, k) matrix of full assignments."""

    def predict_proba(self, codes) -> np.ndarray:
        """Probability vector over the response classes for one assignment.

        Validates the assignment against the schema; the batch entry point
        skips that check and trusts its (internal) callers.
        """
        arr = np.asarray(codes, dtype=np.int64).reshape(1, -1)
        if arr.shape[1] != self.schema.k:
            raise DataFormatError(f"expected {self.schema.k} feature codes")
        if (arr < 0).any() or (arr >= self.schema.sizes_array()[None, :]).any():
            raise DataFormatError("feature code out of domain")
        return self.predict_proba_batch(arr)[0]

    def predicted_class(self, codes) -> int:
        """Argmax class; ties break toward the lowest class index."""
        return int(np.argmax(self.predict_proba(codes)))


class FrequencyTableClassifier(Classifier):
    """Empirical conditional frequencies with Laplace smoothing.

    With smoothing ``alpha = 0`` the output equals the observed class
    frequencies exactly (one float division per class) and unseen
    assignments are an error; with ``alpha > 0`` every assignment is
    defined, unseen ones giving the uniform distribution.
    """

    def __init__(self, schema: FeatureSchema, counts: dict[int, np.ndarray], alpha: float):
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        self.schema = schema
        self.alpha = float(alpha)
        self._counts = counts

    def predict_proba_batch(self, codes: np.ndarray) -> np.ndarray:
        nclasses = self.schema.num_classes
        out = np.empty((codes.shape[0], nclasses), dtype=np.float64)
        strides = self.schema.strides_array()
        indices = codes @ strides
        for pos, idx in enumerate(indices):
            counts = self._counts.get(int(idx))
            if counts is None:
                if self.alpha == 0.0:
                    raise UnseenAssignmentError(
                        f"assignment index {int(idx)} was never observed and "
                        f"alpha is 0"
                    )
                counts = np.zeros(nclasses, dtype=np.int64)
            out[pos] = (counts + self.alpha) / (counts.sum() + self.alpha * nclasses)
        return out


def train_frequency(ds: Dataset, alpha: float = 1.0) -> FrequencyTableClassifier:
    """Tabulate per-assignment class counts from the sample."""
    nclasses = ds.schema.num_classes
    counts: dict[int, np.ndarray] = {}
    for idx, yv in zip(ds.assignment_indices, ds.y):
        row = counts.get(int(idx))
        if row is None:
            row = np.zeros(nclasses, dtype=np.int64)
            counts[int(idx)] = row
        row[yv] += 1
    return FrequencyTableClassifier(ds.schema, counts, alpha)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: int | None = None  # None: ceil(sqrt(k))

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")


class _Tree:
    """One trained tree, flattened into arrays for vectorized descent.

    ``feature[i]`` is the split feature of node i, or -1 for a leaf.
    Children of node i sit at ``children[child_ptr[i] + value]``, one per
    domain value of the split feature. ``dist[i]`` is the smoothed class
    distribution of the node's training rows; only leaf rows are read at
    prediction time.
    """

    __slots__ = ("feature", "child_ptr", "children", "dist", "in_bag")

    def __init__(self, feature, child_ptr, children, dist, in_bag):
        self.feature = feature
        self.child_ptr = child_ptr
        self.children = children
        self.dist = dist
        self.in_bag = in_bag

    def leaf_dist(self, codes: np.ndarray) -> np.ndarray:
        cur = np.zeros(codes.shape[0], dtype=np.int64)
        feat = self.feature[cur]
        active = feat >= 0
        while active.any():
            rows = np.flatnonzero(active)
            nodes = cur[rows]
            vals = codes[rows, feat[rows]]
            cur[rows] = self.children[self.child_ptr[nodes] + vals]
            feat = self.feature[cur]
            active = feat >= 0
        return self.dist[cur]


class RandomForest(Classifier):
    """Bagged multiway categorical trees with soft (distribution) voting."""

    def __init__(self, schema: FeatureSchema, trees: list[_Tree], params: ForestParams, seed: int):
        self.schema = schema
        self.trees = trees
        self.params = params
        self.seed = seed

    def predict_proba_batch(self, codes: np.ndarray) -> np.ndarray:
        total = np.zeros((codes.shape[0], self.schema.num_classes), dtype=np.float64)
        for tree in self.trees:
            total += tree.leaf_dist(codes)
        return total / len(self.trees)


def _grow_tree(all_codes, all_y, schema: FeatureSchema, params: ForestParams, rng) -> _Tree:
    k = schema.k
    sizes = schema.sizes
    nclasses = schema.num_classes
    if params.features_per_split:
        mtry = min(params.features_per_split, k)
    else:
        mtry = min(math.ceil(math.sqrt(k)), k)

    n = all_codes.shape[0]
    bootstrap = rng.integers(0, n, size=n)
    codes = all_codes[bootstrap]
    y = all_y[bootstrap]

    feature: list[int] = []
    child_ptr: list[int] = []
    children: list[int] = []
    dist: list[np.ndarray] = []

    def smoothed(counts: np.ndarray) -> np.ndarray:
        # Laplace alpha=1 keeps leaf distributions strictly inside the simplex.
        return (counts + 1.0) / (counts.sum() + nclasses)

    def leaf(counts: np.ndarray) -> int:
        node = len(feature)
        feature.append(-1)
        child_ptr.append(-1)
        dist.append(smoothed(counts))
        return node

    def best_split(rows: np.ndarray) -> int | None:
        candidates = np.sort(rng.choice(k, size=mtry, replace=False))
        n_node = rows.shape[0]
        best_j: int | None = None
        best_gini = 0.0
        for j in candidates:
            branch = np.zeros((sizes[j], nclasses), dtype=np.int64)
            np.add.at(branch, (codes[rows, j], y[rows]), 1)
            n_v = branch.sum(axis=1)
            nonempty = n_v > 0
            if int(nonempty.sum()) < 2:
                continue
            if params.min_leaf > 1 and (n_v[nonempty] < params.min_leaf).any():
                continue
            sq = (branch[nonempty].astype(np.float64) ** 2).sum(axis=1)
            nv = n_v[nonempty].astype(np.float64)
            gini = float((nv - sq / nv).sum() / n_node)
            if best_j is None or gini < best_gini:  # ascending j: lowest index wins ties
                best_j, best_gini = int(j), gini
        return best_j

    def grow(rows: np.ndarray, depth: int) -> int:
        counts = np.bincount(y[rows], minlength=nclasses)
        if (
            (counts > 0).sum() <= 1
            or rows.shape[0] < 2
            or (params.max_depth is not None and depth >= params.max_depth)
        ):
            return leaf(counts)
        j = best_split(rows)
        if j is None:
            return leaf(counts)
        node = len(feature)
        feature.append(j)
        child_ptr.append(-1)  # patched once the child slots exist
        dist.append(smoothed(counts))
        slot = len(children)
        children.extend([-1] * sizes[j])
        child_ptr[node] = slot
        vals = codes[rows, j]
        for v in range(sizes[j]):
            sub = rows[vals == v]
            if sub.shape[0] == 0:
                # Unseen branch value: fall back to the parent distribution.
                children[slot + v] = leaf(counts)
            else:
                children[slot + v] = grow(sub, depth + 1)
        return node

    grow(np.arange(n), 0)

    return _Tree(
        feature=np.asarray(feature, dtype=np.int64),
        child_ptr=np.asarray(child_ptr, dtype=np.int64),
        children=np.asarray(children, dtype=np.int64),
        dist=np.vstack(dist),
        in_bag=np.unique(bootstrap),
    )


def train_forest(ds: Dataset, params: ForestParams | None = None, seed: int = 0) -> RandomForest:
    """Train a deterministic random forest.

    Each tree draws a bootstrap resample and per-node feature subsets from
    its own generator, derived from the master seed by tree index, so the
    result is reproducible and trees are independent of training order.
    """
    params = params or ForestParams()
    streams = np.random.SeedSequence(seed).spawn(params.n_trees)
    trees = [
        _grow_tree(ds.codes, ds.y, ds.schema, params, np.random.default_rng(s))
        for s in streams
    ]
    return RandomForest(ds.schema, trees, params, seed)


def oob_accuracy(forest: RandomForest, ds: Dataset) -> float:
    """Out-of-bag accuracy: vote only with trees that never saw the row."""
    n = ds.n
    total = np.zeros((n, ds.schema.num_classes), dtype=np.float64)
    votes = np.zeros(n, dtype=np.int64)
    for tree in forest.trees:
        oob = np.ones(n, dtype=bool)
        oob[tree.in_bag] = False
        if not oob.any():
            continue
        total[oob] += tree.leaf_dist(ds.codes[oob])
        votes[oob] += 1
    covered = votes > 0
    if not covered.any():
        raise ValueError("no out-of-bag rows; use more trees")
    pred = np.argmax(total[covered], axis=1)
    return float(np.mean(pred == ds.y[covered]))


class ConstantClassifier(Classifier):
    """Returns one fixed distribution everywhere. Test helper."""

    def __init__(self, schema: FeatureSchema, dist):
        self.schema = schema
        arr = np.asarray(dist, dtype=np.float64)
        if arr.shape != (schema.num_classes,):
            raise ValueError("distribution length must match the response domain")
        self._dist = arr / arr.sum()

    def predict_proba_batch(self, codes: np.ndarray) -> np.ndarray:
        return np.tile(self._dist, (codes.shape[0], 1))


class FeatureBlindClassifier(Classifier):
    """Wrapper that provably ignores selected features.

    The wrapped classifier is queried with the blind coordinates forced to
    zero, so its output cannot depend on them.
    """

    def __init__(self, base: Classifier, blind):
        self.schema = base.schema
        self.base = base
        self.blind = tuple(sorted(set(int(j) for j in blind)))

    def predict_proba_batch(self, codes: np.ndarray) -> np.ndarray:
        masked = codes.copy()
        for j in self.blind:
            masked[:, j] = 0
        return self.base.predict_proba_batch(masked)
