"""Shared oracles and corpus generators for the test suite.

Oracles here are deliberately independent of the library code paths they
check: subset search / chain DP for packing counts, direct cell
enumeration for grid counts, quadrature for tail probabilities.
"""

import itertools
import math

import numpy as np


def packing_exhaustive(points, eps):
    """Maximum eps-separated subset size by explicit subset enumeration."""
    pts = sorted(points)
    for r in range(len(pts), 0, -1):
        for sub in itertools.combinations(pts, r):
            if all(sub[i + 1] - sub[i] >= eps for i in range(len(sub) - 1)):
                return r
    return 0


def packing_chain_dp(points, eps):
    """Maximum eps-separated subset size by longest-chain DP (exact)."""
    pts = sorted(points)
    if not pts:
        return 0
    best = [1] * len(pts)
    for i in range(len(pts)):
        for j in range(i):
            if pts[i] - pts[j] >= eps:
                best[i] = max(best[i], best[j] + 1)
    return max(best)


def minkowski_bruteforce(intervals, n):
    """Count cells [i/n,(i+1)/n) over i in Z meeting any interval, directly."""
    cells = set()
    for a, b in intervals:
        i = -n * 2
        while i <= 2 * n:
            lo, hi = i / n, (i + 1) / n
            if lo <= b and hi > a:
                cells.add(i)
            i += 1
    return len(cells)


def random_point_set(gen, max_points=12):
    k = int(gen.integers(1, max_points + 1))
    return np.sort(gen.random(k))


def random_interval_union(gen, max_intervals=6):
    """Disjoint random intervals in [0,1], some degenerate."""
    m = int(gen.integers(1, max_intervals + 1))
    cuts = np.sort(gen.random(2 * m))
    pairs = []
    for i in range(m):
        a, b = cuts[2 * i], cuts[2 * i + 1]
        if gen.random() < 0.3:
            b = a  # degenerate
        pairs.append((a, b))
    # enforce strict disjointness b_i < a_{i+1}
    out = [pairs[0]]
    for a, b in pairs[1:]:
        if a > out[-1][1]:
            out.append((a, b))
    return out


def ks_two_sample(a, b):
    """Two-sample KS statistic."""
    a = np.sort(a)
    b = np.sort(b)
    allv = np.concatenate([a, b])
    ca = np.searchsorted(a, allv, side="right") / a.size
    cb = np.searchsorted(b, allv, side="right") / b.size
    return float(np.max(np.abs(ca - cb)))


def ks_two_sample_critical(alpha, n, m):
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))
