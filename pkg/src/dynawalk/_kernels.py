"""Numba inner loops for the quadratic-cost experiments.

The per-piece scans deliberately recompute prefix sums from scratch after
every refresh event (O(n) per piece) instead of maintaining incremental
structures; at desk scale the flat loops are faster to verify and, jitted,
fast enough.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def packing_count_many(a, b, eps_arr, out):
    """Greedy packing count of an interval union for many eps values at once."""
    m = a.size
    for q in range(eps_arr.size):
        eps = eps_arr[q]
        count = 0
        nxt = -1.0e300
        for i in range(m):
            start = a[i] if a[i] >= nxt else nxt
            if start > b[i]:
                continue
            k = int(np.floor((b[i] - start) / eps)) + 1
            count += k
            nxt = start + k * eps
        out[q] = count


@njit(cache=True)
def _walk_extremes_one(x0, coords, vals):
    """(min over pieces, piece-0 value, max over pieces) of max_{j<=n} |S_j|."""
    n = x0.size
    x = x0.copy()
    s = 0.0
    m0 = 0.0
    for j in range(n):
        s += x[j]
        a = abs(s)
        if a > m0:
            m0 = a
    lo = m0
    first = m0
    hi = m0
    for e in range(coords.size):
        x[coords[e]] = vals[e]
        s = 0.0
        m0 = 0.0
        for j in range(n):
            s += x[j]
            a = abs(s)
            if a > m0:
                m0 = a
        if m0 < lo:
            lo = m0
        if m0 > hi:
            hi = m0
    return lo, first, hi


@njit(cache=True)
def walk_extremes_batch(x0s, coords_flat, vals_flat, offsets, out_lo, out_first, out_hi):
    for r in range(x0s.shape[0]):
        lo, first, hi = _walk_extremes_one(
            x0s[r], coords_flat[offsets[r]:offsets[r + 1]], vals_flat[offsets[r]:offsets[r + 1]]
        )
        out_lo[r] = lo
        out_first[r] = first
        out_hi[r] = hi


@njit(cache=True)
def recurrence_min_counts(x0, coords, vals, ms):
    """Min over constant-time pieces of the zero-visit counts R(t, m), m in ms.

    Increments are integer-valued (stored as float64); partial sums stay
    exact, so the equality test against zero is exact.
    """
    n = x0.size
    x = x0.copy()
    best = np.full(ms.size, np.int64(1) << 60, np.int64)
    cnt = np.zeros(ms.size, np.int64)
    n_pieces = coords.size + 1
    for piece in range(n_pieces):
        if piece > 0:
            e = piece - 1
            x[coords[e]] = vals[e]
        s = 0.0
        for q in range(ms.size):
            cnt[q] = 0
        for j in range(n):
            s += x[j]
            if s == 0.0:
                for q in range(ms.size):
                    if j < ms[q]:
                        cnt[q] += 1
        for q in range(ms.size):
            if cnt[q] < best[q]:
                best[q] = cnt[q]
    return best
