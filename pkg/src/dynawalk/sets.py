"""Compact subsets of [0,1]: packing counts, grid counts, dimension fits.

Sets are finite unions of disjoint closed intervals; a point is a
degenerate interval.  All counting operations are pure functions of the
interval endpoints, with plain IEEE-double comparisons (separation ties at
exactly eps count as separated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class CompactSet1D:
    """Non-empty union of disjoint closed sub-intervals of [0,1].

    ``resolution`` is the finest scale at which the object faithfully
    represents its generator's target set (None means the set is exact).
    """

    a: np.ndarray
    b: np.ndarray
    provenance: str = "explicit"
    resolution: float | None = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.size == 0:
            raise ValidationError("empty set is not representable")
        if a.shape != b.shape or a.ndim != 1:
            raise ValidationError("endpoint arrays must be matching 1-d arrays")
        if np.any(b < a):
            raise ValidationError("interval with b < a")
        if np.any(a < 0.0) or np.any(b > 1.0):
            raise ValidationError("intervals must lie inside [0,1]")
        if np.any(a[1:] <= b[:-1]):
            raise ValidationError("intervals must be sorted and pairwise disjoint")

    @property
    def n_intervals(self) -> int:
        return int(self.a.size)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.b - self.a))

    def points(self) -> np.ndarray:
        """All endpoints (for degenerate sets these are the points themselves)."""
        return np.unique(np.concatenate([self.a, self.b]))

    def __repr__(self):
        return f"CompactSet1D({self.provenance}, {self.n_intervals} intervals)"


def from_intervals(pairs, provenance="explicit", resolution=None) -> CompactSet1D:
    pairs = sorted((float(x), float(y)) for x, y in pairs)
    return CompactSet1D(
        np.array([p[0] for p in pairs]),
        np.array([p[1] for p in pairs]),
        provenance=provenance,
        resolution=resolution,
    )


def from_points(pts, provenance="explicit") -> CompactSet1D:
    pts = np.unique(np.asarray(list(pts), dtype=float))
    return CompactSet1D(pts, pts.copy(), provenance=provenance)


def union(*sets: CompactSet1D) -> CompactSet1D:
    """Union of compact sets, coalescing overlapping or touching intervals."""
    pairs = sorted(
        (float(x), float(y)) for s in sets for x, y in zip(s.a, s.b)
    )
    merged = [list(pairs[0])]
    for x, y in pairs[1:]:
        if x <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], y)
        else:
            merged.append([x, y])
    res = min((s.resolution for s in sets if s.resolution is not None), default=None)
    return from_intervals(merged, provenance="union", resolution=res)


# ---------------------------------------------------------------------------
# counting operations
# ---------------------------------------------------------------------------


def kolmogorov_entropy(s: CompactSet1D, eps: float) -> int:
    """Maximal number of points of the set that are pairwise >= eps apart.

    Left-to-right greedy sweep: take the leftmost point, then repeatedly the
    leftmost point at distance >= eps from the last chosen one.  In one
    dimension the greedy packing attains the maximum.  Inside one interval
    the chosen points march in exact eps steps, so each interval contributes
    floor((b - start)/eps) + 1 points in a single arithmetic step.
    """
    if not (eps > 0.0) or math.isnan(eps):
        raise ValidationError(f"eps must be positive, got {eps}")
    count = 0
    nxt = -math.inf  # leftmost admissible position for the next point
    for a, b in zip(s.a, s.b):
        start = a if a >= nxt else nxt
        if start > b:
            continue
        k = int(math.floor((b - start) / eps)) + 1
        count += k
        nxt = start + k * eps
    return count


def packing_number_points(sorted_pts: np.ndarray, eps: float) -> int:
    """Greedy packing count for an ascending array of point positions.

    Domain-free helper (points need not lie in [0,1]); used for sampled
    process ranges.  Returns 0 for an empty array.
    """
    if not (eps > 0.0):
        raise ValidationError(f"eps must be positive, got {eps}")
    n = sorted_pts.size
    if n == 0:
        return 0
    count = 1
    last = sorted_pts[0]
    while True:
        j = int(np.searchsorted(sorted_pts, last + eps, side="left"))
        if j >= n:
            return count
        last = sorted_pts[j]
        count += 1


def minkowski_content(s: CompactSet1D, n: int) -> int:
    """Number of grid cells [i/n, (i+1)/n), i over all of Z, meeting the set.

    The point 1 lies in the cell [1, 1 + 1/n), so for sets touching 1 the
    count includes the cell i = n.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    count = 0
    last_cell = None
    for a, b in zip(s.a, s.b):
        i_lo = int(math.floor(a * n))
        i_hi = int(math.floor(b * n))
        if last_cell is not None and i_lo <= last_cell:
            i_lo = last_cell + 1
        if i_lo > i_hi:
            continue
        count += i_hi - i_lo + 1
        last_cell = i_hi
    return count


def interval_hit(s: CompactSet1D, lo: float, hi: float) -> bool:
    """True iff the half-open query interval [lo, hi) intersects the set."""
    if lo > hi:
        raise ValidationError(f"query interval with lo {lo} > hi {hi}")
    if lo == hi:
        return False
    idx = int(np.searchsorted(s.b, lo, side="left"))
    return bool(idx < s.a.size and s.a[idx] < hi)


def pieces_hit(s: CompactSet1D, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Vectorized interval_hit for arrays of query pieces [lo_j, hi_j)."""
    idx = np.searchsorted(s.b, lo, side="left")
    inside = idx < s.a.size
    out = np.zeros(lo.shape, dtype=bool)
    ii = np.minimum(idx, s.a.size - 1)
    out[inside] = s.a[ii[inside]] < hi[inside]
    out &= lo < hi
    return out


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def make_cantor(level: int) -> CompactSet1D:
    """Level-``level`` middle-thirds approximation: 2^level intervals of length 3^-level."""
    if not isinstance(level, (int, np.integer)) or not (1 <= level <= 20):
        raise ValidationError(f"cantor level must be in 1..20, got {level}")
    ivs = [(0, 3**level)]
    for l in range(level):
        size = 3 ** (level - l - 1)
        nxt = []
        for a, b in ivs:
            nxt.append((a, a + size))
            nxt.append((b - size, b))
        ivs = nxt
    den = float(3**level)
    return from_intervals(
        [(a / den, b / den) for a, b in ivs],
        provenance=f"cantor({level})",
        resolution=3.0 ** (-level),
    )


def make_sequence_set(eps: float, k_max: int) -> CompactSet1D:
    """{0} together with r_0 = 1 and r_k = 1 - sum_{j<=k} j^(-1/eps).

    Terms are kept only while they stay inside [0,1]; the first negative
    partial sum truncates the sequence.  Because the j = 1 gap already
    spans the whole interval, the emitted set is {0, r_1 = 0, r_0 = 1}.
    """
    if not (0.0 < eps < 1.0):
        raise ValidationError(f"eps must be in (0,1), got {eps}")
    if k_max < 1:
        raise ValidationError(f"k_max must be >= 1, got {k_max}")
    pts = [0.0, 1.0]
    s = 0.0
    for j in range(1, k_max + 1):
        s += float(j) ** (-1.0 / eps)
        r = 1.0 - s
        if r < 0.0:
            break
        pts.append(r)
    return from_points(pts, provenance=f"sequence({eps},{k_max})")


def make_gap_set(eps: float, k_max: int) -> CompactSet1D:
    """Point set in [0,1] whose consecutive gaps are j^(-1/eps), j = 2..k_max.

    Anchored at 1 and marching left; the degenerate j = 1 gap (which would
    consume all of [0,1]) is dropped so that the family carries its
    polynomial gap structure at every scale.  Packing counts then grow like
    eps-th power of the inverse scale, which is what the dimension fit
    measures.  Truncated at the first point that would leave [0,1].
    """
    if not (0.0 < eps < 1.0):
        raise ValidationError(f"eps must be in (0,1), got {eps}")
    if k_max < 1:
        raise ValidationError(f"k_max must be >= 1, got {k_max}")
    pts = [0.0, 1.0]
    s = 0.0
    for j in range(2, k_max + 1):
        s += float(j) ** (-1.0 / eps)
        r = 1.0 - s
        if r < 0.0:
            break
        pts.append(r)
    return from_points(pts, provenance=f"gapset({eps},{k_max})")


def cantor_family():
    """Resolution -> cantor approximation fine enough for that scale."""

    def gen(resolution: float) -> CompactSet1D:
        level = min(20, max(1, int(math.ceil(math.log(1.0 / resolution) / math.log(3.0)))))
        return make_cantor(level)

    return gen


def gap_family(eps: float):
    """Resolution -> gap set whose smallest retained gap is below that scale."""

    def gen(resolution: float) -> CompactSet1D:
        k_max = int(math.ceil(resolution ** (-eps))) + 2
        return make_gap_set(eps, k_max)

    return gen


def full_interval() -> CompactSet1D:
    return from_intervals([(0.0, 1.0)], provenance="interval")


# ---------------------------------------------------------------------------
# dimension fit
# ---------------------------------------------------------------------------


def fit_entropy_exponent(generator, eps_grid) -> float:
    """Least-squares slope of log K_E(eps) against log(1/eps).

    ``generator`` is either a fixed CompactSet1D or a callable mapping a
    resolution to a CompactSet1D; in the latter case the set is resolved at
    min(eps_grid)/10 before counting.
    """
    eps_grid = sorted(float(e) for e in eps_grid)
    if len(eps_grid) < 4:
        raise ValidationError("eps grid needs at least 4 points")
    if eps_grid[0] <= 0.0:
        raise ValidationError("eps grid must be positive")
    if eps_grid[-1] / eps_grid[0] < 100.0:
        raise ValidationError("eps grid must span at least two decades")
    if callable(generator):
        s = generator(eps_grid[0] / 10.0)
    else:
        s = generator
    ks = np.array([kolmogorov_entropy(s, e) for e in eps_grid], dtype=float)
    x = np.log(1.0 / np.asarray(eps_grid))
    y = np.log(ks)
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# CLI grammar
# ---------------------------------------------------------------------------


def parse_set_spec(spec: str) -> CompactSet1D:
    """interval:a,b | points:p1;p2;... | cantor:LEVEL | sequence:EPS,KMAX | union:SPEC|SPEC"""
    if spec.startswith("interval:"):
        try:
            a, b = (float(x) for x in spec[len("interval:"):].split(","))
        except ValueError as exc:
            raise ValidationError(f"bad interval spec {spec!r}") from exc
        return from_intervals([(a, b)], provenance="interval")
    if spec.startswith("points:"):
        try:
            pts = [float(x) for x in spec[len("points:"):].split(";") if x]
        except ValueError as exc:
            raise ValidationError(f"bad points spec {spec!r}") from exc
        if not pts:
            raise ValidationError("points spec carries no points")
        return from_points(pts)
    if spec.startswith("cantor:"):
        try:
            level = int(spec[len("cantor:"):])
        except ValueError as exc:
            raise ValidationError(f"bad cantor spec {spec!r}") from exc
        return make_cantor(level)
    if spec.startswith("sequence:"):
        try:
            e, k = spec[len("sequence:"):].split(",")
            return make_sequence_set(float(e), int(k))
        except ValueError as exc:
            raise ValidationError(f"bad sequence spec {spec!r}") from exc
    if spec.startswith("union:"):
        parts = spec[len("union:"):].split("|")
        return union(*(parse_set_spec(p) for p in parts))
    raise ValidationError(f"unknown set spec {spec!r}")
