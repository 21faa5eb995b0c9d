"""First-passage quantities of mean-zero finite-variance lattice walks.

The walk is normalized onto the additive group it generates: when the
support gcd g exceeds 1 every position and target is divided by g before
analysis.  Episodes are simulated in vectorized chunks with geometric
chunk growth; unbounded stopping times are censored at a cap and the
censored fraction travels with every estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError, ValidationError
from .randvar import IncrementDistribution
from .report import BracketReport
from .streams import RngStream

_Z99 = 2.5758293035489004


@dataclass(frozen=True)
class LatticeWalkSpec:
    """Increment law on Z with mean 0; derived variance and group gcd."""

    dist: IncrementDistribution
    sigma2: float = field(init=False)
    gcd: int = field(init=False)

    def __post_init__(self):
        if not self.dist.is_lattice:
            raise ValidationError("lattice walk needs a lattice distribution")
        self.dist.require_centered()
        object.__setattr__(self, "sigma2", self.dist.variance)
        object.__setattr__(self, "gcd", self.dist.group_gcd())

    @staticmethod
    def from_pmf(pmf: dict) -> "LatticeWalkSpec":
        return LatticeWalkSpec(IncrementDistribution.lattice(pmf))

    def reduced_support(self):
        """(support, cumulative probs) on the gcd-reduced lattice."""
        support = np.asarray(self.dist.support, dtype=np.int64) // self.gcd
        cum = np.cumsum(np.asarray(self.dist.probs))
        return support, cum

    def reduce_target(self, z: int) -> int:
        if z % self.gcd != 0:
            raise ValidationError(f"z={z} not in the group {self.gcd}Z of the walk")
        return z // self.gcd


@dataclass(frozen=True)
class FirstPassageSample:
    """Episode records started at 0: return time, passage time to z, zero visits.

    Times are >= 1; episodes stop at min(T(z), cap), so T0 is observed only
    when the return happens first (cap + 1 marks "not seen").
    local_time_L0 counts the initial visit, so it is >= 1.
    """

    T0: np.ndarray
    Tz: np.ndarray
    local_time_L0: np.ndarray
    censored: np.ndarray
    cap: int


def _draw_steps(gen, support, cum, shape):
    u = gen.random(shape)
    idx = np.minimum(np.searchsorted(cum, u, side="right"), support.size - 1)
    return support[idx]


def green_function(spec: LatticeWalkSpec, n: int) -> float:
    """G(n): expected visits to 0 during steps 1..n, by exact pmf convolution.

    Dynamic programming in extended precision over the reachable window
    [-L i, L i]; exact up to floating point since the support is bounded.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    support, _ = spec.reduced_support()
    L = int(np.max(np.abs(support)))
    if L == 0:
        raise ValidationError("walk has no movement")
    if L * support.size * n * n > 2e10:
        raise ResourceError(f"green_function budget exceeded for n={n}, L={L}")
    kernel = np.zeros(2 * L + 1, dtype=np.longdouble)
    for v, p in zip(spec.dist.support, spec.dist.probs):
        kernel[v // spec.gcd + L] = p
    vec = np.zeros(1, dtype=np.longdouble)
    vec[0] = 1.0
    center = 0
    total = np.longdouble(0.0)
    for _ in range(n):
        vec = np.convolve(vec, kernel)
        center += L
        total += vec[center]
    return float(total)


def simple_walk_ruin_exact(z: int) -> float:
    """Closed-form P{T(z) <= T(0)} for the +-1 walk: 1/(2|z|)."""
    if z == 0:
        raise ValidationError("z must be non-zero")
    return 1.0 / (2.0 * abs(z))


# ---------------------------------------------------------------------------
# episode engines (vectorized, chunked)
# ---------------------------------------------------------------------------


def _ruin_batch(args, seed, lo, hi):
    """Episodes from 0 absorbed at first visit of {0, z} (step >= 1)."""
    support, cum, z, cap = args
    R = hi - lo
    gen = RngStream(seed, lo).generator()
    pos = np.zeros(R, dtype=np.int64)
    active = np.arange(R)
    success = 0
    censored = 0
    steps = 0
    chunk = 16
    while active.size and steps < cap:
        c = min(chunk, cap - steps)
        inc = _draw_steps(gen, support, cum, (active.size, c))
        paths = pos[active, None] + np.cumsum(inc, axis=1)
        hit = (paths == 0) | (paths == z)
        any_hit = hit.any(axis=1)
        fi = np.argmax(hit, axis=1)
        done = np.flatnonzero(any_hit)
        if done.size:
            success += int(np.count_nonzero(paths[done, fi[done]] == z))
        keep = ~any_hit
        pos[active[keep]] = paths[keep, -1]
        active = active[keep]
        steps += c
        chunk = min(chunk * 2, 4096)
    censored = int(active.size)
    return success, censored


def ruin_probability(spec, z, reps, cap, rng, workers=1) -> BracketReport:
    """Monte Carlo P{T(z) <= T(0)} with the 1/(1+|z|) bracket attached.

    For z != 0 the non-strict and strict events coincide (a single position
    cannot be 0 and z at once).  Censored episodes count as neither hit;
    a censored fraction at or above 1e-3 flags the report.
    """
    if z == 0:
        raise ValidationError("z must be non-zero")
    if reps < 1 or cap < 1:
        raise ValidationError("reps and cap must be positive")
    zr = spec.reduce_target(int(z))
    support, cum = spec.reduced_support()
    from .harness import map_batches

    parts = map_batches(_ruin_batch, (support, cum, zr, int(cap)), reps, batch=4096,
                        workers=workers, seed=rng.master_seed)
    success = sum(p[0] for p in parts)
    censored = sum(p[1] for p in parts)
    flags = []
    cfrac = censored / reps
    if cfrac >= 1e-3:
        flags.append("censored")
    theory = 1.0 / (1.0 + abs(z))
    return BracketReport.from_hits(
        name=f"z={z}", hits=success, reps=reps, seed=rng.master_seed,
        theory_value=theory, flags=flags,
        extra={"z": z, "cap": cap, "censored_fraction": cfrac,
               "scaled_estimate": (success / reps) * (1 + abs(z))},
    )


def _survival_batch(args, seed, lo, hi):
    """Episodes from z, absorbed at 0; count survivors past horizon n."""
    support, cum, z, horizon = args
    R = hi - lo
    gen = RngStream(seed, lo).generator()
    pos = np.full(R, z, dtype=np.int64)
    active = np.arange(R)
    steps = 0
    chunk = 16
    while active.size and steps < horizon:
        c = min(chunk, horizon - steps)
        inc = _draw_steps(gen, support, cum, (active.size, c))
        paths = pos[active, None] + np.cumsum(inc, axis=1)
        hit = paths == 0
        any_hit = hit.any(axis=1)
        keep = ~any_hit
        pos[active[keep]] = paths[keep, -1]
        active = active[keep]
        steps += c
        chunk = min(chunk * 2, 4096)
    return int(active.size)


def survival_probability(spec, z, n, reps, rng, workers=1) -> float:
    """Monte Carlo P_z{T(0) > n}."""
    if n < 1 or reps < 1:
        raise ValidationError("n and reps must be positive")
    zr = spec.reduce_target(int(z))
    support, cum = spec.reduced_support()
    from .harness import map_batches

    parts = map_batches(_survival_batch, (support, cum, zr, int(n)), reps, batch=4096,
                        workers=workers, seed=rng.master_seed)
    return sum(parts) / reps


def _passage_batch(args, seed, lo, hi):
    """Episodes from 0 absorbed at z; record T(z), first return T0, zero visits."""
    support, cum, z, cap = args
    R = hi - lo
    gen = RngStream(seed, lo).generator()
    pos = np.zeros(R, dtype=np.int64)
    Tz = np.full(R, cap + 1, dtype=np.int64)
    T0 = np.full(R, cap + 1, dtype=np.int64)
    L0 = np.ones(R, dtype=np.int64)  # the initial visit at time 0
    active = np.arange(R)
    steps = 0
    chunk = 16
    while active.size and steps < cap:
        c = min(chunk, cap - steps)
        inc = _draw_steps(gen, support, cum, (active.size, c))
        paths = pos[active, None] + np.cumsum(inc, axis=1)
        hitz = paths == z
        any_hit = hitz.any(axis=1)
        fi = np.argmax(hitz, axis=1)
        cut = np.where(any_hit, fi, c - 1)
        cols = np.arange(c)
        zeros_before = (paths == 0) & (cols[None, :] <= cut[:, None])
        L0[active] += zeros_before.sum(axis=1)
        has_zero = zeros_before.any(axis=1)
        fz = np.argmax(zeros_before, axis=1)
        newly = has_zero & (T0[active] > cap)
        T0[active[newly]] = steps + fz[newly] + 1
        done = np.flatnonzero(any_hit)
        Tz[active[done]] = steps + fi[done] + 1
        keep = ~any_hit
        pos[active[keep]] = paths[keep, -1]
        active = active[keep]
        steps += c
        chunk = min(chunk * 2, 4096)
    censored = np.zeros(R, dtype=bool)
    censored[active] = True
    return Tz, T0, L0, censored


def sample_first_passage(spec, z, reps, cap, rng, workers=1) -> FirstPassageSample:
    """Draw (T0, Tz, L0) episode records for walks started at 0."""
    if z == 0:
        raise ValidationError("z must be non-zero")
    zr = spec.reduce_target(int(z))
    support, cum = spec.reduced_support()
    from .harness import map_batches

    parts = map_batches(_passage_batch, (support, cum, zr, int(cap)), reps, batch=4096,
                        workers=workers, seed=rng.master_seed)
    return FirstPassageSample(
        Tz=np.concatenate([p[0] for p in parts]),
        T0=np.concatenate([p[1] for p in parts]),
        local_time_L0=np.concatenate([p[2] for p in parts]),
        censored=np.concatenate([p[3] for p in parts]),
        cap=int(cap),
    )


@dataclass(frozen=True)
class LocalTimeReport:
    """Empirical law of the zero visits before the first passage to z."""

    z: int
    counts: np.ndarray  # counts[k-1] = #episodes with exactly k visits
    n_effective: int
    mean: float
    mean_stderr: float
    p_first: float  # empirical P{L = 1} = strict ruin estimate
    gof_stat: float
    gof_pvalue: float
    gof_dof: int
    censored_fraction: float
    flags: tuple
    seed: int


def local_time_distribution(spec, z, reps, cap, rng, workers=1) -> LocalTimeReport:
    """Visit-count law to 0 before T(z), with a geometric goodness-of-fit.

    The geometric parameter is estimated by 1/mean (its MLE), so the
    chi-square degrees of freedom drop by one extra.
    """
    from scipy.stats import chi2

    fp = sample_first_passage(spec, z, reps, cap, rng, workers)
    ok = ~fp.censored
    L = fp.local_time_L0[ok]
    n_eff = int(L.size)
    if n_eff == 0:
        raise ResourceError("all episodes censored; raise the cap")
    counts = np.bincount(L)[1:]  # index k-1 <-> L = k
    mean = float(L.mean())
    mean_se = float(L.std(ddof=1) / math.sqrt(n_eff)) if n_eff > 1 else math.inf
    p_hat = 1.0 / mean  # geometric MLE for P{L = 1}
    # pool bins so every expected count is >= 5
    probs = []
    k = 1
    while True:
        pk = (1 - p_hat) ** (k - 1) * p_hat
        if pk * n_eff < 5.0 or k > counts.size:
            break
        probs.append(pk)
        k += 1
    if len(probs) < 2:
        stat, pval, dof = math.nan, math.nan, 0
    else:
        tail = 1.0 - sum(probs)
        expected = np.array(probs + [tail]) * n_eff
        observed = np.zeros(len(probs) + 1)
        observed[:len(probs)] = counts[:len(probs)]
        observed[-1] = n_eff - counts[:len(probs)].sum()
        dof = len(expected) - 2  # one for totals, one for the estimated parameter
        stat = float(np.sum((observed - expected) ** 2 / expected))
        pval = float(chi2.sf(stat, dof))
    cfrac = float(np.count_nonzero(fp.censored)) / reps
    flags = ("censored",) if cfrac >= 1e-3 else ()
    return LocalTimeReport(
        z=int(z), counts=counts, n_effective=n_eff, mean=mean, mean_stderr=mean_se,
        p_first=float(counts[0]) / n_eff if counts.size else math.nan,
        gof_stat=stat, gof_pvalue=pval, gof_dof=dof,
        censored_fraction=cfrac, flags=flags, seed=rng.master_seed,
    )


def theta_of_z(spec, z, reps, rng, *, max_budget=1 << 22, workers=1) -> int:
    """Smallest dyadic n with the Monte Carlo P0{T(z) > n} at or below 1/8.

    The replication count must put the 99% CI half-width of the crossing
    estimate below 0.01.
    """
    if z == 0:
        raise ValidationError("z must be non-zero")
    if reps < 1:
        raise ValidationError("reps must be positive")
    half = _Z99 * math.sqrt(0.125 * 0.875 / reps)
    if half >= 0.01:
        raise ValidationError(f"reps={reps} gives CI half-width {half:.4f} >= 0.01 near 1/8")
    cap = max(1024 * abs(z) ** 2, 4096)
    while True:
        if cap > max_budget:
            raise ResourceError(f"theta_of_z budget exhausted at cap={cap}")
        fp = sample_first_passage(spec, z, reps, cap, rng, workers)
        surv_final = float(np.count_nonzero(fp.censored)) / reps
        if surv_final <= 0.125:
            break
        cap *= 4
    n = 1
    while n <= cap:
        p = float(np.count_nonzero(fp.Tz > n)) / reps
        if p <= 0.125:
            return n
        n *= 2
    raise ResourceError("survival never crossed 1/8 below the cap")


@dataclass(frozen=True)
class PgpReport:
    """Both sides of the last-exit bound P_z{T(0)>n} <= 1/(G(n) P0{T(z)<=T(0)})."""

    z: int
    n: int
    lhs: float
    lhs_stderr: float
    rhs: float
    ruin_estimate: float
    green: float
    relative_ci: float
    slack_bound: float
    passed: bool
    seed: int


def pgp_inequality_check(spec, z, n, reps, rng, cap=1_000_000, workers=1) -> PgpReport:
    """Monte Carlo check of the survival bound against the Green/ruin side.

    The acceptance slack (1 + 6 * relative CI) combines the 99% relative
    half-widths of the two estimates in quadrature.
    """
    from .streams import splitmix64

    ruin = ruin_probability(spec, z, reps, cap, rng, workers)
    # survival runs on a derived master seed so the two estimates are independent
    lhs = survival_probability(spec, z, n, reps, RngStream(splitmix64(rng.master_seed + 1)), workers)
    g = green_function(spec, n)
    p = ruin.estimate
    if p <= 0.0:
        raise ResourceError("ruin estimate is zero; cannot form the bound")
    rhs = 1.0 / (g * p) if g > 0.0 else math.inf  # G(n)=0 makes the bound vacuous
    rel_ruin = _Z99 * ruin.stderr / p
    lhs_se = math.sqrt(lhs * (1 - lhs) / reps)
    rel_lhs = _Z99 * lhs_se / lhs if lhs > 0 else 0.0
    rel = math.sqrt(rel_ruin**2 + rel_lhs**2)
    slack = rhs * (1.0 + 6.0 * rel)
    return PgpReport(
        z=int(z), n=int(n), lhs=lhs, lhs_stderr=lhs_se, rhs=rhs,
        ruin_estimate=p, green=g, relative_ci=rel, slack_bound=slack,
        passed=bool(lhs <= slack), seed=rng.master_seed,
    )
