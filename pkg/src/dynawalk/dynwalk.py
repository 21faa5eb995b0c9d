"""Event-driven simulation of the refreshing random walk and its experiments.

One trajectory over the time window [0,1] is a Poisson(n) number of
refresh events laid over n initial increments: the superposition of n
independent rate-one clocks, generated as one sorted stream of uniform
times with uniform coordinate marks.  Between events every partial sum is
constant, so path functionals reduce to scans over the event pieces.

Every replication draws from its own counter-based stream
(master_seed, replication_index); results are therefore independent of
batching and worker scheduling.  Draw order per replication is fixed:
initial increments, event count, times, coordinates, refresh values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ValidationError
from .randvar import IncrementDistribution, phi_bar
from .report import BracketReport
from .sets import CompactSet1D, kolmogorov_entropy, pieces_hit
from .streams import RngStream

_ONE_PLUS = np.nextafter(1.0, 2.0)  # closes the right endpoint of the final piece


@dataclass(frozen=True)
class DynamicalTrajectory:
    """Record of one trajectory: initial increments plus time-sorted refreshes."""

    n: int
    x0: np.ndarray
    times: np.ndarray
    coords: np.ndarray
    new_values: np.ndarray

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    def increments_at(self, t: float) -> np.ndarray:
        """The increment vector (X_1(t), ..., X_n(t))."""
        x = self.x0.copy()
        upto = int(np.searchsorted(self.times, t, side="right"))
        for e in range(upto):
            x[self.coords[e]] = self.new_values[e]
        return x

    def walk_at(self, t: float) -> np.ndarray:
        """All partial sums S_1(t), ..., S_n(t)."""
        return np.cumsum(self.increments_at(t))

    def piece_bounds(self):
        """Half-open piece intervals covering [0,1]; the last one closes t = 1."""
        lo = np.concatenate([[0.0], self.times])
        hi = np.concatenate([self.times, [_ONE_PLUS]])
        return lo, hi

    def full_sum_pieces(self) -> np.ndarray:
        """S_n on each piece, via one delta per event."""
        deltas = _event_deltas(self.x0, self.coords, self.new_values)
        return float(self.x0.sum()) + np.concatenate([[0.0], np.cumsum(deltas)])


def _event_deltas(x0, coords, new_values):
    """new - previous value per event, events already in time order."""
    N = coords.size
    if N == 0:
        return np.empty(0)
    order = np.argsort(coords, kind="stable")  # time order preserved within coordinate
    prev = np.empty(N)
    sorted_coords = coords[order]
    sorted_vals = new_values[order]
    first = np.ones(N, dtype=bool)
    first[1:] = sorted_coords[1:] != sorted_coords[:-1]
    prev[order[first]] = x0[sorted_coords[first]]
    not_first = np.flatnonzero(~first)
    prev[order[not_first]] = sorted_vals[not_first - 1]
    return new_values - prev


def _draw_trajectory(gen, n, dist):
    x0 = dist.sample(gen, n)
    N = int(gen.poisson(n))
    times = np.sort(1.0 - gen.random(N))
    coords = gen.integers(0, n, N)
    vals = dist.sample(gen, N)
    return x0, times, coords, vals


def simulate_trajectory(n: int, dist: IncrementDistribution, rng: RngStream) -> DynamicalTrajectory:
    """One trajectory of the length-n walk over [0,1]."""
    if n < 1:
        raise ValidationError(f"walk length must be >= 1, got {n}")
    x0, times, coords, vals = _draw_trajectory(rng.generator(), n, dist)
    return DynamicalTrajectory(n=n, x0=x0, times=times, coords=coords, new_values=vals)


def sup_over_set(traj: DynamicalTrajectory, E: CompactSet1D) -> float:
    """sup over t in E of S_n(t), scanning constant pieces that meet E."""
    S = traj.full_sum_pieces()
    lo, hi = traj.piece_bounds()
    hit = pieces_hit(E, lo, hi)
    return float(S[hit].max())


# ---------------------------------------------------------------------------
# sup-threshold bracket experiment
# ---------------------------------------------------------------------------


def genest_experiment_multi(
    n: int,
    z: float,
    sets: list,
    dist: IncrementDistribution,
    reps: int,
    rng: RngStream,
    workers: int = 1,
) -> list:
    """P{sup over E of S_n >= z sqrt(n)} for several sets on shared trajectories.

    Sharing the replication streams across sets gives common random numbers:
    the estimates are coupled and inherit the pathwise monotonicity of the
    sup in E.
    """
    if reps < 1:
        raise ValidationError("reps must be >= 1")
    if z < 1.0:
        raise ValidationError(f"z must be >= 1, got {z}")
    flags = []
    if z > n**0.25:
        flags.append("outside-z-regime")
    from .harness import map_batches

    args = (n, z, [(s.a, s.b) for s in sets], dist)
    hits = map_batches(_genest_batch, args, reps, batch=2048, workers=workers, seed=rng.master_seed)
    totals = [0] * len(sets)
    for part in hits:
        for i, h in enumerate(part):
            totals[i] += h
    thresh = z * math.sqrt(n)
    out = []
    for s, h in zip(sets, totals):
        B = kolmogorov_entropy(s, 1.0 / z**2) * phi_bar(z)
        out.append(
            BracketReport.from_hits(
                name=s.provenance,
                hits=h,
                reps=reps,
                seed=rng.master_seed,
                theory_value=B,
                flags=flags,
                extra={"n": n, "z": z, "threshold": thresh},
            )
        )
    return out


def _genest_batch(args, seed, lo, hi):
    n, z, set_arrays, dist = args
    thresh = z * math.sqrt(n)
    hits = [0] * len(set_arrays)
    for r in range(lo, hi):
        gen = RngStream(seed, r).generator()
        x0, times, coords, vals = _draw_trajectory(gen, n, dist)
        deltas = _event_deltas(x0, coords, vals)
        S = float(x0.sum()) + np.concatenate([[0.0], np.cumsum(deltas)])
        plo = np.concatenate([[0.0], times])
        phi = np.concatenate([times, [_ONE_PLUS]])
        for i, (a, b) in enumerate(set_arrays):
            idx = np.searchsorted(b, plo, side="left")
            ok = idx < a.size
            mask = np.zeros(plo.shape, dtype=bool)
            ii = np.minimum(idx, a.size - 1)
            mask[ok] = a[ii[ok]] < phi[ok]
            if S[mask].max() >= thresh:
                hits[i] += 1
    return hits


def genest_experiment(n, z, E, dist, reps, rng, workers=1) -> BracketReport:
    """Single-set version of the sup-threshold bracket experiment."""
    return genest_experiment_multi(n, z, [E], dist, reps, rng, workers)[0]


# ---------------------------------------------------------------------------
# two-parameter field: moments and marginals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldSample:
    """Samples of the normalized field S_{floor(un)}(t)/sqrt(n) on a (u,t) grid."""

    u_grid: tuple
    t_grid: tuple
    values: np.ndarray  # shape (reps, len(u_grid), len(t_grid))


@dataclass(frozen=True)
class InvarianceReport:
    u_grid: tuple
    t_grid: tuple
    mean: np.ndarray
    cov: np.ndarray
    cov_theory: np.ndarray
    cov_exact: np.ndarray
    ks_stats: np.ndarray
    ks_critical_1pct: float
    reps: int
    seed: int

    def labels(self):
        return [(u, t) for u in self.u_grid for t in self.t_grid]

    def worst_cov_error(self) -> float:
        return float(np.max(np.abs(self.cov - self.cov_theory)))


def sample_field(n, u_grid, t_grid, dist, reps, rng, workers=1) -> FieldSample:
    """Draw the normalized field on the grid, one column sweep per time point."""
    u_grid = tuple(float(u) for u in u_grid)
    t_grid = tuple(float(t) for t in t_grid)
    if not u_grid or not t_grid:
        raise ValidationError("grids must be non-empty")
    if any(not 0.0 <= u <= 1.0 for u in u_grid) or any(not 0.0 <= t <= 1.0 for t in t_grid):
        raise ValidationError("grids must lie in [0,1]")
    if sorted(t_grid) != list(t_grid):
        raise ValidationError("t grid must be sorted")
    from .harness import map_batches

    args = (n, u_grid, t_grid, dist)
    parts = map_batches(_field_batch, args, reps, batch=2048, workers=workers, seed=rng.master_seed)
    return FieldSample(u_grid, t_grid, np.concatenate(parts, axis=0))


def _field_batch(args, seed, lo, hi):
    n, u_grid, t_grid, dist = args
    ks = [int(math.floor(u * n)) for u in u_grid]
    out = np.empty((hi - lo, len(u_grid), len(t_grid)))
    root_n = math.sqrt(n)
    for r in range(lo, hi):
        gen = RngStream(seed, r).generator()
        x, times, coords, vals = _draw_trajectory(gen, n, dist)
        ei = 0
        N = times.size
        for it, t in enumerate(t_grid):
            while ei < N and times[ei] <= t:
                x[coords[ei]] = vals[ei]
                ei += 1
            cs = np.cumsum(x)
            for iu, k in enumerate(ks):
                out[r - lo, iu, it] = cs[k - 1] / root_n if k >= 1 else 0.0
    return out


def invariance_experiment(n, u_grid, t_grid, dist, reps, rng, workers=1) -> InvarianceReport:
    """Empirical mean/covariance of the field plus per-marginal normality stats.

    The covariance target is exp(-|t-s|) min(u,v); the exact finite-n value
    replaces min(u,v) by floor(min(u,v) n)/n and is reported alongside.
    """
    if not dist.is_normalized:
        raise ValidationError("invariance experiment needs a mean-0 variance-1 distribution")
    fs = sample_field(n, u_grid, t_grid, dist, reps, rng, workers)
    flat = fs.values.reshape(reps, -1)
    labels = [(u, t) for u in fs.u_grid for t in fs.t_grid]
    m = flat.shape[1]
    cov_theory = np.empty((m, m))
    cov_exact = np.empty((m, m))
    for i, (u, t) in enumerate(labels):
        for j, (v, s) in enumerate(labels):
            cov_theory[i, j] = math.exp(-abs(t - s)) * min(u, v)
            cov_exact[i, j] = math.exp(-abs(t - s)) * math.floor(min(u, v) * n) / n
    ks = np.empty(m)
    for i, (u, t) in enumerate(labels):
        z = np.sort(flat[:, i] / math.sqrt(u)) if u > 0 else np.zeros(reps)
        ks[i] = _ks_statistic_normal(z)
    return InvarianceReport(
        u_grid=fs.u_grid,
        t_grid=fs.t_grid,
        mean=flat.mean(axis=0),
        cov=np.cov(flat.T),
        cov_theory=cov_theory,
        cov_exact=cov_exact,
        ks_stats=ks,
        ks_critical_1pct=ks_critical(0.01, reps),
        reps=reps,
        seed=rng.master_seed,
    )


def _ks_statistic_normal(sorted_sample: np.ndarray) -> float:
    from scipy.special import ndtr

    n = sorted_sample.size
    cdf = ndtr(sorted_sample)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def ks_critical(alpha: float, n: int) -> float:
    """Asymptotic one-sample KS critical value at level alpha."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


# ---------------------------------------------------------------------------
# recurrence, small-deviation, and tightness experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecurrenceReport:
    n: int
    horizons: tuple
    min_counts: tuple  # min over constant-t pieces of the zero-visit count
    n_events: int
    seed: int


def recurrence_experiment(n_max, dist, rng, horizons=None) -> RecurrenceReport:
    """Worst return count to zero across all constant-time pieces.

    The walk must be lattice with mean zero (general variance is allowed:
    only the zero level matters).  Per piece the count #{k <= m: S_k = 0}
    is recomputed in full.
    """
    if not dist.is_lattice:
        raise ValidationError("recurrence experiment needs a lattice distribution")
    dist.require_centered()
    if horizons is None:
        horizons = (n_max // 4, n_max // 2, n_max)
    ms = np.asarray(horizons, dtype=np.int64)
    if np.any(ms < 1) or np.any(ms > n_max):
        raise ValidationError("horizons must lie in 1..n_max")
    gen = rng.generator()
    x0, times, coords, vals = _draw_trajectory(gen, n_max, dist)
    best = _kernels.recurrence_min_counts(x0, coords, vals, ms)
    return RecurrenceReport(
        n=n_max,
        horizons=tuple(int(m) for m in ms),
        min_counts=tuple(int(b) for b in best),
        n_events=int(times.size),
        seed=rng.master_seed,
    )


def _extremes_batch(args, seed, lo, hi):
    (n, dist) = args
    R = hi - lo
    x0s = np.empty((R, n))
    all_coords = []
    all_vals = []
    offsets = np.zeros(R + 1, dtype=np.int64)
    for r in range(lo, hi):
        gen = RngStream(seed, r).generator()
        x0, times, coords, vals = _draw_trajectory(gen, n, dist)
        x0s[r - lo] = x0
        all_coords.append(coords)
        all_vals.append(vals)
        offsets[r - lo + 1] = offsets[r - lo] + coords.size
    coords_flat = np.concatenate(all_coords) if all_coords else np.empty(0, np.int64)
    vals_flat = np.concatenate(all_vals) if all_vals else np.empty(0)
    out_lo = np.empty(R)
    out_first = np.empty(R)
    out_hi = np.empty(R)
    _kernels.walk_extremes_batch(x0s, coords_flat, vals_flat, offsets, out_lo, out_first, out_hi)
    return out_lo, out_first, out_hi


def _walk_extremes(n, dist, reps, rng, workers=1):
    """Per replication: (inf over pieces, piece-0 value, max over pieces) of max_j |S_j|."""
    from .harness import map_batches

    parts = map_batches(_extremes_batch, (n, dist), reps, batch=4096, workers=workers, seed=rng.master_seed)
    lo = np.concatenate([p[0] for p in parts])
    first = np.concatenate([p[1] for p in parts])
    hi = np.concatenate([p[2] for p in parts])
    return lo, first, hi


_CHUNG_RATE = math.pi**2 / 8.0
_CHUNG_SIDE = math.pi / math.sqrt(2.0)


def chung_experiment_multi(n, eps_list, reps, rng, workers=1) -> list:
    """P{inf over t of max_j |S_j(t)| <= eps sqrt(n)} for an eps grid, shared paths.

    One simulation pass serves every eps (common random numbers), so the
    estimates are monotone in eps by construction.  Reports carry the
    small-deviation forms exp(-pi^2/(8 eps^2))/eps^2 and /eps^6 with unit
    constants, and a flag when n eps^8 fails the asymptotic side condition.
    """
    eps_list = [float(e) for e in eps_list]
    if any(not (0.0 < e < 1.0) for e in eps_list):
        raise ValidationError("eps values must lie in (0,1)")
    dist = IncrementDistribution.standard_normal()
    inf_vals, first_vals, _ = _walk_extremes(n, dist, reps, rng, workers)
    out = []
    for e in eps_list:
        flags = []
        if n * e**8 <= _CHUNG_SIDE:
            flags.append("outside-eps-regime")
        thresh = e * math.sqrt(n)
        hits = int(np.count_nonzero(inf_vals <= thresh))
        static_hits = int(np.count_nonzero(first_vals <= thresh))
        core = math.exp(-_CHUNG_RATE / e**2)
        out.append(
            BracketReport.from_hits(
                name=f"eps={e:g}",
                hits=hits,
                reps=reps,
                seed=rng.master_seed,
                theory_value=None,
                flags=flags,
                extra={
                    "n": n,
                    "eps": e,
                    "theory_low": core / e**2,
                    "theory_high": core / e**6,
                    "static_estimate": static_hits / reps,
                },
            )
        )
    return out


def chung_experiment(n, eps, reps, rng, workers=1) -> BracketReport:
    return chung_experiment_multi(n, [eps], reps, rng, workers)[0]


@dataclass(frozen=True)
class TightnessReport:
    n: int
    estimate: float  # Monte Carlo E[max_k sup_u |S_k(u)|^2]
    stderr: float
    bound: float  # 64 n
    reps: int
    seed: int


def tightness_moment_experiment(n, dist, reps, rng, workers=1) -> TightnessReport:
    """Second moment of the running maximum over both indices, against 64n."""
    dist.require_centered()
    if abs(dist.variance - 1.0) > 1e-9:
        raise ValidationError("tightness experiment needs unit variance")
    _, _, sup_vals = _walk_extremes(n, dist, reps, rng, workers)
    sq = sup_vals**2
    est = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(reps))
    return TightnessReport(n=n, estimate=est, stderr=se, bound=64.0 * n, reps=reps, seed=rng.master_seed)
