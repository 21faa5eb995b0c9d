"""Packing-count scaling of the visited set of a heavy-tailed stable path.

Paths over the time window [1, 2] are discretized on a uniform mesh; the
visited positions inside a window form a point cloud standing in for the
closed range, and the mean p-th power of its packing count is fitted
against the inverse scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError, ValidationError
from .randvar import sample_symmetric_stable
from .sets import packing_number_points
from .streams import RngStream


@dataclass(frozen=True)
class RangeSample:
    """Deduplicated visited positions inside the clip window."""

    positions: np.ndarray  # sorted, possibly empty
    alpha: float
    mesh: float
    window: tuple

    @property
    def n_positions(self) -> int:
        return int(self.positions.size)


def simulate_range(alpha: float, mesh_points: int, rng_or_gen,
                   window: tuple = (-2.0, 2.0)) -> RangeSample:
    """Grid approximation of the path range over [1, 2], clipped to the window.

    The start value is drawn from the time-1 law; each of the mesh_points
    increments is a fresh stable draw scaled by h^(1/alpha) with h the mesh.
    """
    if mesh_points < 1:
        raise ValidationError("mesh_points must be >= 1")
    gen = rng_or_gen.generator() if isinstance(rng_or_gen, RngStream) else rng_or_gen
    h = 1.0 / mesh_points
    y0 = sample_symmetric_stable(alpha, gen, 1)[0]
    inc = (h ** (1.0 / alpha)) * sample_symmetric_stable(alpha, gen, mesh_points)
    pos = y0 + np.concatenate([[0.0], np.cumsum(inc)])
    pos = pos[np.isfinite(pos)]
    lo, hi = window
    pos = pos[(pos >= lo) & (pos <= hi)]
    return RangeSample(np.unique(pos), alpha, h, (float(lo), float(hi)))


@dataclass(frozen=True)
class RangeScalingReport:
    alpha: float
    p: int
    eps_list: tuple
    mean_kp: tuple  # Monte Carlo E[K^p] per eps
    slope: float  # fitted exponent of E[K^p] against 1/eps
    reps: int
    mesh: float
    interval: tuple
    seed: int


def _range_k_batch(args, seed, lo, hi):
    alpha, mesh_points, eps_list, interval = args
    gen = RngStream(seed, lo).generator()
    out = np.zeros((hi - lo, len(eps_list)))
    for r in range(hi - lo):
        rs = simulate_range(alpha, mesh_points, gen)
        pts = rs.positions
        pts = pts[(pts >= interval[0]) & (pts <= interval[1])]
        for j, e in enumerate(eps_list):
            out[r, j] = packing_number_points(pts, e)
    return out


def range_entropy_scaling(alpha, eps_list, p, reps, rng, *, mesh=100_000,
                          interval=(-1.0, 1.0), workers=1) -> RangeScalingReport:
    """Least-squares slope of log E[K^p] against log(1/eps) over the eps grid.

    The mesh must resolve the requested scales: smallest eps at least
    10 h^(1/alpha), else the grid approximation undercounts.
    """
    if not (0.0 < alpha < 1.0):
        raise ValidationError(f"alpha {alpha} outside (0, 1)")
    if p < 1:
        raise ValidationError("p must be a positive integer")
    if reps < 2:
        raise ValidationError("reps must be >= 2")
    eps_list = sorted(float(e) for e in eps_list)
    h = 1.0 / mesh
    if eps_list[0] < 10.0 * h ** (1.0 / alpha):
        raise ResolutionError(
            f"eps {eps_list[0]:g} below 10 h^(1/alpha) = {10.0 * h ** (1.0 / alpha):g}"
        )
    from .harness import map_batches

    parts = map_batches(_range_k_batch, (alpha, mesh, eps_list, interval), reps,
                        batch=64, workers=workers, seed=rng.master_seed)
    ks = np.concatenate(parts, axis=0)
    mean_kp = (ks.astype(float) ** p).mean(axis=0)
    if np.any(mean_kp <= 0.0):
        raise ResolutionError("some eps saw empty ranges only; enlarge reps or interval")
    x = np.log(1.0 / np.asarray(eps_list))
    slope = float(np.polyfit(x, np.log(mean_kp), 1)[0])
    return RangeScalingReport(
        alpha=float(alpha), p=int(p), eps_list=tuple(eps_list),
        mean_kp=tuple(float(v) for v in mean_kp), slope=slope,
        reps=reps, mesh=h, interval=(float(interval[0]), float(interval[1])),
        seed=rng.master_seed,
    )
