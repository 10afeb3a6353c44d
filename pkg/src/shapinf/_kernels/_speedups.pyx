# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the exact-marginalization and Shapley inner loops.

Operation order matches shapinf._kernels._fallback exactly (row-major
odometer enumeration, Kahan-compensated sums), so both backends return
bit-identical doubles. Compile with -ffp-contract=off to keep it that way.
"""

import numpy as np

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def masked_mean(const double[::1] table, const long long[::1] sizes,
                const long long[::1] strides, const long long[::1] codes,
                long long mask):
    """Mean of ``table`` over all assignments agreeing with ``codes`` on ``mask``."""
    cdef Py_ssize_t k = sizes.shape[0]
    if k > 63:
        raise ValueError("at most 63 features are supported")

    cdef long long fsizes[64]
    cdef long long fstrides[64]
    cdef long long idx[64]
    cdef Py_ssize_t nfree = 0
    cdef long long offset = 0
    cdef long long count = 1
    cdef Py_ssize_t j, p
    cdef long long i
    cdef double s = 0.0, comp = 0.0, v, y, t

    for j in range(k):
        if (mask >> j) & 1:
            offset += codes[j] * strides[j]
        else:
            fsizes[nfree] = sizes[j]
            fstrides[nfree] = strides[j]
            idx[nfree] = 0
            count *= sizes[j]
            nfree += 1

    with nogil:
        for i in range(count):
            v = table[offset]
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


def shapley_dense(const double[::1] values, const double[::1] weights, int t):
    """Shapley vector of a dense ``t``-player game (see fallback docstring)."""
    cdef unsigned long long n = 1ULL << t
    cdef unsigned long long m, bit
    cdef int player
    cdef double s, comp, contrib, y, tt
    out = np.empty(t, dtype=np.float64)
    cdef double[::1] ov = out

    with nogil:
        for player in range(t):
            bit = 1ULL << player
            s = 0.0
            comp = 0.0
            for m in range(n):
                if m & bit:
                    continue
                contrib = weights[__builtin_popcountll(m)] * (values[m | bit] - values[m])
                y = contrib - comp
                tt = s + y
                comp = (tt - s) - y
                s = tt
            ov[player] = s
    return out
