"""Pure-Python kernels.

These mirror the compiled versions in shapinf._kernels._speedups operation
for operation: same enumeration order, same Kahan-compensated summation.
Because both run in IEEE-754 double precision, the two backends agree bit
for bit, which the test suite asserts.
"""

from __future__ import annotations

import numpy as np


def masked_mean(table, sizes, strides, codes, mask: int) -> float:
    """Mean of ``table`` over all assignments agreeing with ``codes`` on ``mask``.

    ``table`` holds one value per full assignment, indexed row-major with the
    given ``strides`` (last feature varies fastest). Bit j of ``mask`` pins
    feature j to ``codes[j]``; the remaining features are enumerated
    exhaustively. Summation is Kahan-compensated in enumeration order.
    """
    k = len(sizes)
    offset = 0
    free: list[int] = []
    for j in range(k):
        if (mask >> j) & 1:
            offset += int(codes[j]) * int(strides[j])
        else:
            free.append(j)
    count = 1
    for j in free:
        count *= int(sizes[j])

    fsizes = [int(sizes[j]) for j in free]
    fstrides = [int(strides[j]) for j in free]
    idx = [0] * len(free)
    nfree = len(free)

    s = 0.0
    comp = 0.0
    for _ in range(count):
        v = float(table[offset])
        y = v - comp
        t = s + y
        comp = (t - s) - y
        s = t
        for p in range(nfree - 1, -1, -1):
            idx[p] += 1
            offset += fstrides[p]
            if idx[p] < fsizes[p]:
                break
            idx[p] = 0
            offset -= fsizes[p] * fstrides[p]
    return s / count


def shapley_dense(values, weights, t: int):
    """Shapley vector of a dense ``t``-player game.

    ``values[m]`` is the worth of the coalition whose members are the set
    bits of ``m``; ``weights[s]`` is the marginal-contribution weight for a
    coalition of size ``s``, i.e. s!(t-s-1)!/t!. Masks are scanned in
    ascending order with Kahan-compensated accumulation.
    """
    n = 1 << t
    out = np.empty(t, dtype=np.float64)
    for player in range(t):
        bit = 1 << player
        s = 0.0
        comp = 0.0
        for m in range(n):
            if m & bit:
                continue
            contrib = float(weights[m.bit_count()]) * (
                float(values[m | bit]) - float(values[m])
            )
            y = contrib - comp
            tt = s + y
            comp = (tt - s) - y
            s = tt
        out[player] = s
    return out
