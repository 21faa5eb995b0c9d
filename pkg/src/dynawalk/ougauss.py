"""Exact Gaussian sampling: the stationary mean-reverting process and the
sheet-built limit field.

The one-parameter process is drawn through its Markov recursion, whose
implied covariance is exactly exp(-|t_i - t_j|); the two-parameter field
comes from rectangle sums of white noise on the warped grid (u, e^{2t}),
scaled by e^{-t}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .randvar import bivariate_upper, phi_bar
from .report import BracketReport
from .sets import CompactSet1D
from .streams import RngStream


@dataclass(frozen=True)
class GaussianVectorSpec:
    """Evaluation points plus the covariance rule ("ou" or "field")."""

    points: tuple
    rule: str = "ou"

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValidationError("no evaluation points")
        if any(not 0.0 <= p <= 1.0 for p in pts):
            raise ValidationError("points must lie in [0,1]")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValidationError("points must be sorted and distinct")
        if self.rule not in ("ou", "field"):
            raise ValidationError(f"unknown covariance rule {self.rule!r}")

    def covariance(self) -> np.ndarray:
        t = np.asarray(self.points)
        return np.exp(-np.abs(t[:, None] - t[None, :]))


def ou_transition(points) -> tuple:
    """Markov recursion coefficients (decay a_k, innovation scale b_k)."""
    t = np.asarray(points, dtype=float)
    d = np.diff(t)
    a = np.exp(-d)
    return a, np.sqrt(1.0 - a * a)


def sample_ou(spec: GaussianVectorSpec, rng_or_gen, reps: int = 1) -> np.ndarray:
    """Joint draw(s) of the stationary process at the spec's points.

    Z(t_1) ~ N(0,1), then Z(t_{k+1}) = e^{-d} Z(t_k) + sqrt(1-e^{-2d}) xi.
    Returns shape (reps, m).
    """
    if spec.rule != "ou":
        raise ValidationError("sample_ou needs the ou covariance rule")
    gen = rng_or_gen.generator() if isinstance(rng_or_gen, RngStream) else rng_or_gen
    from scipy.special import ndtri

    m = len(spec.points)
    a, b = ou_transition(spec.points)
    out = np.empty((reps, m))
    out[:, 0] = ndtri(gen.random(reps))
    for k in range(m - 1):
        out[:, k + 1] = a[k] * out[:, k] + b[k] * ndtri(gen.random(reps))
    return out


def discretize_for_sup(E: CompactSet1D, z: float) -> tuple:
    """Finite evaluation points for a sup over E at threshold scale z.

    Non-degenerate intervals are sampled at mesh 1/(20 z^2) (the packing
    count changes on scale 1/z^2, so the sup discretization error stays
    below the bracket's resolution).  Returns (points, mesh or None).
    """
    mesh = 1.0 / (20.0 * z * z)
    pts = []
    discretized = False
    for a, b in zip(E.a, E.b):
        if b - a <= mesh:
            pts.append(a)
            if b > a:
                pts.append(b)
                discretized = True
        else:
            k = int(math.ceil((b - a) / mesh))
            pts.extend(np.linspace(a, b, k + 1).tolist())
            discretized = True
    pts = sorted(set(pts))
    return tuple(pts), (mesh if discretized else None)


def _ou_sup_batch(args, seed, lo, hi):
    points, z = args
    spec = GaussianVectorSpec(points, "ou")
    gen = RngStream(seed, lo).generator()
    draws = sample_ou(spec, gen, reps=hi - lo)
    return int(np.count_nonzero(draws.max(axis=1) >= z))


def ou_sup_probability(E: CompactSet1D, z: float, reps: int, rng: RngStream,
                       workers: int = 1) -> BracketReport:
    """Monte Carlo P{max over the (discretized) set >= z} with its bracket.

    The bracket is K_E(1/z^2) PhiBar(z); for a two-point set the exact
    inclusion-exclusion value through the bivariate upper orthant rides
    along as an oracle.
    """
    from .harness import map_batches
    from .sets import kolmogorov_entropy

    if reps < 1:
        raise ValidationError("reps must be positive")
    if z < 1.0:
        raise ValidationError(f"z must be >= 1, got {z}")
    points, mesh = discretize_for_sup(E, z)
    if not points:
        raise ValidationError("empty discretization")
    parts = map_batches(_ou_sup_batch, (points, z), reps, batch=65536, workers=workers,
                        seed=rng.master_seed)
    hits = sum(parts)
    theory = kolmogorov_entropy(E, 1.0 / z**2) * phi_bar(z)
    extra = {"z": z, "n_points": len(points)}
    flags = []
    if mesh is not None:
        extra["mesh"] = mesh
        flags.append("discretized")
    if len(points) == 2:
        rho = math.exp(-abs(points[1] - points[0]))
        extra["exact_two_point"] = 2.0 * phi_bar(z) - bivariate_upper(z, z, rho)
    return BracketReport.from_hits(
        name=E.provenance, hits=hits, reps=reps, seed=rng.master_seed,
        theory_value=theory, flags=flags, extra=extra,
    )


def sheet_field_sample(u_grid, t_grid, rng_or_gen, reps: int = 1) -> np.ndarray:
    """Exact draws of the limit field on a (u, t) grid via rectangle sums.

    White noise is laid on the grid {(u_i, e^{2 t_j})}, summed cumulatively
    in both directions, and scaled by e^{-t_j}.  Returns shape
    (reps, len(u_grid), len(t_grid)).
    """
    u = np.asarray(sorted(float(x) for x in u_grid))
    t = np.asarray(sorted(float(x) for x in t_grid))
    if u.size == 0 or t.size == 0:
        raise ValidationError("grids must be non-empty")
    if np.any(u < 0.0) or np.any(u > 1.0) or np.any(t < 0.0) or np.any(t > 1.0):
        raise ValidationError("grids must lie in [0,1]")
    gen = rng_or_gen.generator() if isinstance(rng_or_gen, RngStream) else rng_or_gen
    from scipy.special import ndtri

    r = np.exp(2.0 * t)
    du = np.diff(np.concatenate([[0.0], u]))
    dr = np.diff(np.concatenate([[0.0], r]))
    scale = np.sqrt(np.outer(du, dr))
    noise = ndtri(gen.random((reps, u.size, t.size))) * scale[None, :, :]
    beta = np.cumsum(np.cumsum(noise, axis=1), axis=2)
    return beta / np.exp(t)[None, None, :]


@dataclass(frozen=True)
class SheetCovarianceReport:
    u_grid: tuple
    t_grid: tuple
    pairs: list  # ((u,t), (v,s), empirical, theory)
    worst_error: float
    reps: int
    seed: int


def sheet_covariance_experiment(u_grid, t_grid, reps, rng: RngStream) -> SheetCovarianceReport:
    """Empirical covariance of the sheet-built field against exp(-|t-s|) min(u,v)."""
    vals = sheet_field_sample(u_grid, t_grid, rng, reps=reps)
    u = sorted(float(x) for x in u_grid)
    t = sorted(float(x) for x in t_grid)
    flat = vals.reshape(reps, -1)
    labels = [(uu, tt) for uu in u for tt in t]
    C = np.cov(flat.T) if flat.shape[1] > 1 else np.array([[flat.var(ddof=1)]])
    pairs = []
    worst = 0.0
    for i, (uu, tt) in enumerate(labels):
        for j, (vv, ss) in enumerate(labels):
            if i > j:
                continue
            th = math.exp(-abs(tt - ss)) * min(uu, vv)
            emp = float(C[i, j])
            worst = max(worst, abs(emp - th))
            pairs.append(((uu, tt), (vv, ss), emp, th))
    return SheetCovarianceReport(tuple(u), tuple(t), pairs, worst, reps, rng.master_seed)
