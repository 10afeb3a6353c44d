"""Shapley values of restricted coalition games.

The production path is the subset-sum formula over all coalitions of the
scope, with per-size factorial weights precomputed as exact rationals and
converted to floats once. An independent permutation-enumeration oracle is
kept for testing; the two must never be merged.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import SizeLimitError
from .game import GameRestriction

MAX_PLAYERS = 20
ORACLE_MAX_PLAYERS = 8


@lru_cache(maxsize=None)
def coalition_weights(t: int) -> tuple[float, ...]:
    """Weights s!(t-s-1)!/t! for coalition sizes s = 0..t-1, exact until
    the single final float conversion."""
    fact = math.factorial
    return tuple(
        float(Fraction(fact(s) * fact(t - s - 1), fact(t))) for s in range(t)
    )


@dataclass(frozen=True)
class ShapleyVector:
    """Per-feature allocation of a restricted game's full worth."""

    scope: tuple[int, ...]
    values: dict[int, float]

    def __getitem__(self, feature: int) -> float:
        return self.values[int(feature)]

    def total(self) -> float:
        return math.fsum(self.values[j] for j in self.scope)

    def as_array(self) -> np.ndarray:
        return np.asarray([self.values[j] for j in self.scope], dtype=np.float64)


def shapley(restriction: GameRestriction, max_players: int = MAX_PLAYERS) -> ShapleyVector:
    """Subset-sum Shapley value of a game restricted to its scope.

    Evaluates the parent game on all 2^|T| coalitions of the scope (through
    the game's memo) and accumulates weighted marginal contributions in the
    selected kernel backend.
    """
    t = restriction.size
    if t > max_players:
        raise SizeLimitError(
            f"scope has {t} features, over the exact-Shapley bound of {max_players}"
        )
    dense = restriction.dense_values()
    weights = np.asarray(coalition_weights(t), dtype=np.float64)
    phi = _kernels.shapley_dense(dense, weights, t)
    return ShapleyVector(
        scope=restriction.scope,
        values={j: float(phi[p]) for p, j in enumerate(restriction.scope)},
    )


def shapley_oracle(restriction: GameRestriction) -> ShapleyVector:
    """Average marginal contribution over all |T|! orderings.

    Exponentially slower than ``shapley`` and deliberately independent of
    it; used only to cross-check results in tests.
    """
    t = restriction.size
    if t > ORACLE_MAX_PLAYERS:
        raise SizeLimitError(
            f"scope has {t} features, over the oracle bound of {ORACLE_MAX_PLAYERS}"
        )
    contribs: dict[int, list[float]] = {j: [] for j in restriction.scope}
    for order in itertools.permutations(restriction.scope):
        mask = 0
        prev = 0.0
        for j in order:
            mask |= 1 << j
            worth = restriction.value(mask)
            contribs[j].append(worth - prev)
            prev = worth
    n_orders = math.factorial(t)
    return ShapleyVector(
        scope=restriction.scope,
        values={j: math.fsum(parts) / n_orders for j, parts in contribs.items()},
    )


def balanced_contribution_gap(restriction: GameRestriction, l: int, m: int) -> float:
    """Residual of the balanced-contributions identity for features l, m.

    Returns [phi_l(T) - phi_l(T without m)] - [phi_m(T) - phi_m(T without l)],
    which is zero (up to float noise) for every game.
    """
    l, m = int(l), int(m)
    if l == m or l not in restriction.scope or m not in restriction.scope:
        raise ValueError("l and m must be distinct members of the scope")
    full = shapley(restriction)
    without_m = shapley(restriction.drop(m))
    without_l = shapley(restriction.drop(l))
    return (full[l] - without_m[l]) - (full[m] - without_l[m])
