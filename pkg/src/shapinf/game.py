"""Per-instance coalition games over feature subsets.

The worth of a coalition S for an instance is the classifier's probability
of the target class with the S-features pinned to the instance's values and
every other feature marginalized uniformly, minus the uniform mean over the
whole assignment space. The subtracted mean (the baseline) is the only term
shared between instances; it is computed once per (classifier, class) pair
by the evaluator and reused by every game.

Coalitions are bitmasks over feature indices. Exact marginalization runs
through the kernels in shapinf._kernels; coalitions whose free space
exceeds the configured cap fall back to seeded Monte Carlo draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .classifiers import Classifier, PREDICT_CHUNK
from .errors import CapacityError, QueryError

_BASELINE_STREAM = 0
_COALITION_STREAM = 1


@dataclass(frozen=True)
class ComputeSettings:
    """Enumeration and sampling budgets for game evaluation.

    ``table_cap`` bounds the assignment-space size for which classifier
    values are precomputed into a dense table. ``exact_coalition_cap``
    bounds the per-coalition free-space size enumerated exactly; larger
    coalitions are estimated from ``sample_budget`` uniform draws seeded
    from ``sample_seed``. ``baseline_cap`` bounds exact baseline
    enumeration. ``force_sampled`` switches everything to sampling.
    """

    table_cap: int = 1 << 20
    exact_coalition_cap: int = 1 << 16
    baseline_cap: int = 1 << 24
    sample_budget: int = 1 << 14
    sample_seed: int = 0
    force_sampled: bool = False
    max_players: int = 20
    workers: int = 1


def coalition_mask(coalition, k: int) -> int:
    """Normalize a coalition (bitmask or iterable of feature indices)."""
    if isinstance(coalition, (int, np.integer)):
        mask = int(coalition)
        if mask < 0 or mask >> k:
            raise QueryError(f"coalition mask {mask:#x} out of range for k={k}")
        return mask
    mask = 0
    for j in coalition:
        j = int(j)
        if not 0 <= j < k:
            raise QueryError(f"feature index {j} out of range for k={k}")
        mask |= 1 << j
    return mask


class ClassEvaluator:
    """Uniform-marginalization engine for one (classifier, target class) pair.

    Immutable after construction and safe to share across games and worker
    threads. Holds the dense value table when the assignment space is small
    enough, and the baseline either way.
    """

    def __init__(self, classifier: Classifier, target: int, settings: ComputeSettings | None = None):
        self.classifier = classifier
        self.schema = classifier.schema
        self.target = int(target)
        if not 0 <= self.target < self.schema.num_classes:
            raise QueryError(f"class code {target} out of range")
        self.settings = settings or ComputeSettings()
        self.sizes = self.schema.sizes_array()
        self.strides = self.schema.strides_array()
        self.table: np.ndarray | None = None

        na = self.schema.num_assignments
        if self.settings.force_sampled:
            self.baseline_exact = False
            self.baseline = self._sampled_baseline()
        elif na <= self.settings.table_cap:
            self.table = self._build_table()
            self.baseline_exact = True
            self.baseline = float(
                _kernels.masked_mean(
                    self.table, self.sizes, self.strides,
                    np.zeros(self.schema.k, dtype=np.int64), 0,
                )
            )
        elif na <= self.settings.baseline_cap:
            self.baseline_exact = True
            self.baseline = self._stream_mean(np.zeros(self.schema.k, dtype=np.int64), 0)
        else:
            raise CapacityError(
                f"assignment space of {na} cells exceeds the exact baseline cap "
                f"of {self.settings.baseline_cap}; rerun in sampled mode"
            )

    def _build_table(self) -> np.ndarray:
        na = self.schema.num_assignments
        table = np.empty(na, dtype=np.float64)
        for start in range(0, na, PREDICT_CHUNK):
            stop = min(start + PREDICT_CHUNK, na)
            lin = np.arange(start, stop, dtype=np.int64)
            codes = (lin[:, None] // self.strides[None, :]) % self.sizes[None, :]
            table[start:stop] = self.classifier.predict_proba_batch(codes)[:, self.target]
        table.setflags(write=False)
        return table

    def free_count(self, mask: int) -> int:
        out = 1
        for j in range(self.schema.k):
            if not (mask >> j) & 1:
                out *= int(self.sizes[j])
        return out

    def exact_mean(self, codes: np.ndarray, mask: int) -> float:
        """Exact uniform mean with the masked features pinned to ``codes``."""
        if self.table is not None:
            return float(
                _kernels.masked_mean(self.table, self.sizes, self.strides, codes, mask)
            )
        return self._stream_mean(codes, mask)

    def _stream_mean(self, codes: np.ndarray, mask: int) -> float:
        """Chunked enumeration without a table; same order and compensation
        as the kernel, so mask 0 reproduces the baseline bit for bit."""
        k = self.schema.k
        free = [j for j in range(k) if not (mask >> j) & 1]
        count = 1
        for j in free:
            count *= int(self.sizes[j])
        lstrides = [1] * len(free)
        for p in range(len(free) - 2, -1, -1):
            lstrides[p] = lstrides[p + 1] * int(self.sizes[free[p + 1]])

        s = 0.0
        comp = 0.0
        for start in range(0, count, PREDICT_CHUNK):
            stop = min(start + PREDICT_CHUNK, count)
            lin = np.arange(start, stop, dtype=np.int64)
            full = np.repeat(codes[None, :], stop - start, axis=0)
            for p, j in enumerate(free):
                full[:, j] = (lin // lstrides[p]) % int(self.sizes[j])
            vals = self.classifier.predict_proba_batch(full)[:, self.target]
            for v in vals:
                fv = float(v)
                y = fv - comp
                t = s + y
                comp = (t - s) - y
                s = t
        return s / count

    def sampled_mean(self, codes: np.ndarray, mask: int, m: int, entropy) -> float:
        """Unbiased estimate of the masked mean from ``m`` uniform draws."""
        if m < 1:
            raise QueryError("sample count must be >= 1")
        k = self.schema.k
        free = [j for j in range(k) if not (mask >> j) & 1]
        if not free:
            return self._value_at(codes)
        rng = np.random.default_rng(np.random.SeedSequence(entropy))
        full = np.repeat(codes[None, :], m, axis=0)
        draws = rng.integers(0, self.sizes[free], size=(m, len(free)), dtype=np.int64)
        full[:, free] = draws
        if self.table is not None:
            vals = self.table[full @ self.strides]
        else:
            vals = self.classifier.predict_proba_batch(full)[:, self.target]
        return math.fsum(float(v) for v in vals) / m

    def _value_at(self, codes: np.ndarray) -> float:
        if self.table is not None:
            return float(self.table[int(codes @ self.strides)])
        return float(self.classifier.predict_proba(codes)[self.target])

    def _sampled_baseline(self) -> float:
        m = max(self.settings.sample_budget, 1 << 14)
        entropy = [self.settings.sample_seed, _BASELINE_STREAM, self.target]
        return self.sampled_mean(
            np.zeros(self.schema.k, dtype=np.int64), 0, m, entropy
        )


def baseline(classifier: Classifier, target: int, settings: ComputeSettings | None = None) -> float:
    """Uniform mean of the target-class probability over all assignments."""
    return ClassEvaluator(classifier, target, settings).baseline


class CoalitionGame:
    """Characteristic function over feature coalitions for one instance.

    Values are memoized per coalition bitmask; the memo is a pure cache and
    recomputation reproduces every value exactly. The empty coalition is 0
    by construction (the pinned term coincides with the baseline).
    """

    def __init__(self, evaluator: ClassEvaluator, instance_codes):
        self.evaluator = evaluator
        self.codes = np.ascontiguousarray(instance_codes, dtype=np.int64)
        if self.codes.shape != (evaluator.schema.k,):
            raise QueryError("instance must be a full assignment")
        if (self.codes < 0).any() or (self.codes >= evaluator.sizes).any():
            raise QueryError("instance code out of domain")
        self.target = evaluator.target
        self.baseline = evaluator.baseline
        self.assignment_index = int(self.codes @ evaluator.strides)
        self.used_sampling = not evaluator.baseline_exact
        self._memo: dict[int, float] = {}

    @property
    def players(self) -> range:
        return range(self.evaluator.schema.k)

    @property
    def full_mask(self) -> int:
        return (1 << self.evaluator.schema.k) - 1

    def value(self, coalition) -> float:
        mask = coalition_mask(coalition, self.evaluator.schema.k)
        hit = self._memo.get(mask)
        if hit is not None:
            return hit
        v = self._compute(mask)
        self._memo[mask] = v
        return v

    def _compute(self, mask: int) -> float:
        if mask == 0:
            return 0.0
        settings = self.evaluator.settings
        nfree = self.evaluator.free_count(mask)
        if (
            not settings.force_sampled
            and nfree <= settings.exact_coalition_cap
        ):
            return self.evaluator.exact_mean(self.codes, mask) - self.baseline
        self.used_sampling = True
        entropy = [
            settings.sample_seed,
            _COALITION_STREAM,
            self.assignment_index,
            self.target,
            mask,
        ]
        return (
            self.evaluator.sampled_mean(self.codes, mask, settings.sample_budget, entropy)
            - self.baseline
        )

    def value_sampled(self, coalition, m: int, seed: int) -> float:
        """Monte Carlo estimate with an explicit seed; not memoized."""
        mask = coalition_mask(coalition, self.evaluator.schema.k)
        if mask == 0:
            return 0.0
        return self.evaluator.sampled_mean(self.codes, mask, m, [seed, mask]) - self.baseline

    def clear_cache(self) -> None:
        self._memo.clear()

    def restrict(self, scope: Iterable[int]) -> "GameRestriction":
        return GameRestriction(self, scope)


class GameRestriction:
    """View of a game on the subsets of a nonempty scope T."""

    def __init__(self, parent, scope: Iterable[int]):
        members = tuple(sorted(set(int(j) for j in scope)))
        if not members:
            raise QueryError("scope must be nonempty")
        for j in members:
            if j not in parent.players:
                raise QueryError(f"feature index {j} outside the parent game")
        self.parent = parent
        self.scope = members
        self.scope_mask = 0
        for j in members:
            self.scope_mask |= 1 << j

    @property
    def size(self) -> int:
        return len(self.scope)

    def value(self, coalition) -> float:
        mask = coalition_mask(coalition, max(self.parent.players) + 1)
        if mask & ~self.scope_mask:
            raise QueryError("coalition not contained in the restriction scope")
        return self.parent.value(mask)

    def global_mask(self, local_mask: int) -> int:
        out = 0
        for p, j in enumerate(self.scope):
            if (local_mask >> p) & 1:
                out |= 1 << j
        return out

    def dense_values(self) -> np.ndarray:
        """Game values for every subset of the scope, indexed by local mask."""
        t = len(self.scope)
        out = np.empty(1 << t, dtype=np.float64)
        for local in range(1 << t):
            out[local] = self.parent.value(self.global_mask(local))
        return out

    def drop(self, feature: int) -> "GameRestriction":
        return GameRestriction(self.parent, [j for j in self.scope if j != int(feature)])


class DenseGame:
    """A game given by an explicit table of coalition values. Test helper."""

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        n = arr.shape[0]
        t = n.bit_length() - 1
        if n != (1 << t):
            raise ValueError("value table length must be a power of two")
        if arr[0] != 0.0:
            raise ValueError("the empty coalition must be worth 0")
        self._values = arr
        self._t = t

    @property
    def players(self) -> range:
        return range(self._t)

    def value(self, coalition) -> float:
        return float(self._values[coalition_mask(coalition, self._t)])

    def restrict(self, scope: Iterable[int]) -> GameRestriction:
        return GameRestriction(self, scope)
