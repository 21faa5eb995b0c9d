"""Experiment orchestration: batching, worker pool, dispatch, serialization.

Replications are keyed by (master_seed, replication_index) and batches are
cut at fixed boundaries independent of the worker count, so a run's output
is a pure function of (config, master_seed): worker counts 1 and 8 give
byte-identical CSV.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import latticewalk, ougauss, stablerange
from . import dynwalk as dw
from .envelope import parse_envelope
from .errors import ValidationError
from .randvar import parse_distribution
from .report import ExperimentReport, report_from_brackets
from .sets import kolmogorov_entropy, parse_set_spec
from .streams import RngStream


def map_batches(fn, args, reps, batch, workers, seed=None, _seed_from_args=False):
    """Apply fn(args, seed, lo, hi) over fixed-size index batches, in order.

    The batch partition depends only on (reps, batch); workers only decide
    where batches run.  Results come back in ascending batch order.
    """
    if seed is None:
        raise ValidationError("map_batches needs the master seed")
    bounds = [(lo, min(lo + batch, reps)) for lo in range(0, reps, batch)]
    if workers <= 1 or len(bounds) == 1:
        return [fn(args, seed, lo, hi) for lo, hi in bounds]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(fn, args, seed, lo, hi) for lo, hi in bounds]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    master_seed: int = 1
    reps: int = 10000
    workers: int = 1
    out: str | None = None
    plotdata: bool = False

    def resolved(self) -> dict:
        d = {"subcommand": self.subcommand, "seed": self.master_seed, "reps": self.reps,
             "workers": self.workers}
        d.update(self.params)
        return d


def _require(config: ExperimentConfig, *names):
    missing = [n for n in names if config.params.get(n) is None]
    if missing:
        raise ValidationError(f"{config.subcommand}: missing parameters {missing}")


def _positive_reps(config):
    if config.reps < 1:
        raise ValidationError("reps must be a positive integer")


# ---------------------------------------------------------------------------
# per-subcommand runners
# ---------------------------------------------------------------------------


def _run_genest(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "n", "z", "set", "dist")
    _positive_reps(config)
    p = config.params
    sets = [parse_set_spec(s) for s in p["set"].split("+")]
    dist = parse_distribution(p["dist"])
    rng = RngStream(config.master_seed)
    brs = dw.genest_experiment_multi(
        int(p["n"]), float(p["z"]), sets, dist, config.reps, rng, config.workers
    )
    flags = sorted({f for b in brs for f in b.flags})
    return report_from_brackets(
        "genest", config.resolved(), brs, config.master_seed, flags=flags,
        extra={"plot_x": "z", "plot_y": "estimate"},
    )


def _run_invariance(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "n", "u_grid", "t_grid", "dist")
    _positive_reps(config)
    p = config.params
    u_grid = [float(x) for x in p["u_grid"].split(";")]
    t_grid = [float(x) for x in p["t_grid"].split(";")]
    dist = parse_distribution(p["dist"])
    rng = RngStream(config.master_seed)
    rep = dw.invariance_experiment(int(p["n"]), u_grid, t_grid, dist, config.reps, rng, config.workers)
    rows = []
    labels = rep.labels()
    for i, (u, t) in enumerate(labels):
        for j, (v, s) in enumerate(labels):
            if i > j:
                continue
            rows.append({
                "u": u, "t": t, "v": v, "s": s,
                "cov": float(rep.cov[i, j]),
                "cov_theory": float(rep.cov_theory[i, j]),
                "cov_exact": float(rep.cov_exact[i, j]),
                "ks_i": float(rep.ks_stats[i]) if i == j else None,
                "ks_critical": rep.ks_critical_1pct if i == j else None,
            })
    cols = ["u", "t", "v", "s", "cov", "cov_theory", "cov_exact", "ks_i", "ks_critical"]
    return ExperimentReport("invariance", config.resolved(), cols, rows,
                            master_seed=config.master_seed)


def _run_recurrence(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "n", "dist")
    p = config.params
    dist = parse_distribution(p["dist"])
    rng = RngStream(config.master_seed)
    rep = dw.recurrence_experiment(int(p["n"]), dist, rng)
    rows = [
        {"m": m, "min_return_count": c, "n": rep.n, "n_events": rep.n_events}
        for m, c in zip(rep.horizons, rep.min_counts)
    ]
    return ExperimentReport("recurrence", config.resolved(),
                            ["m", "min_return_count", "n", "n_events"], rows,
                            master_seed=config.master_seed)


def _run_chung(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "n", "eps")
    _positive_reps(config)
    p = config.params
    eps_list = [float(x) for x in str(p["eps"]).split(";")]
    rng = RngStream(config.master_seed)
    brs = dw.chung_experiment_multi(int(p["n"]), eps_list, config.reps, rng, config.workers)
    flags = sorted({f for b in brs for f in b.flags})
    return report_from_brackets("chung", config.resolved(), brs, config.master_seed, flags=flags,
                                extra={"plot_x": "eps", "plot_y": "estimate"})


def _run_tightness(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "n", "dist")
    _positive_reps(config)
    p = config.params
    dist = parse_distribution(p["dist"])
    rng = RngStream(config.master_seed)
    rep = dw.tightness_moment_experiment(int(p["n"]), dist, config.reps, rng, config.workers)
    rows = [{
        "n": rep.n, "estimate": rep.estimate, "stderr": rep.stderr,
        "bound_64n": rep.bound, "reps": rep.reps,
        "within_bound": rep.estimate + 3 * rep.stderr <= rep.bound,
    }]
    return ExperimentReport("tightness", config.resolved(),
                            ["n", "estimate", "stderr", "bound_64n", "reps", "within_bound"],
                            rows, master_seed=config.master_seed)


def _run_ruin(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "z", "dist")
    _positive_reps(config)
    p = config.params
    spec = latticewalk.LatticeWalkSpec(parse_distribution(p["dist"]))
    zs = [int(x) for x in str(p["z"]).split(";")]
    cap = int(p.get("cap", 1_000_000))
    rng = RngStream(config.master_seed)
    brs = [latticewalk.ruin_probability(spec, z, config.reps, cap, rng, config.workers) for z in zs]
    flags = sorted({f for b in brs for f in b.flags})
    return report_from_brackets("ruin", config.resolved(), brs, config.master_seed, flags=flags,
                                extra={"plot_x": "z", "plot_y": "estimate"})


def _run_survival(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "z", "n", "dist")
    _positive_reps(config)
    p = config.params
    spec = latticewalk.LatticeWalkSpec(parse_distribution(p["dist"]))
    z, n = int(p["z"]), int(p["n"])
    rng = RngStream(config.master_seed)
    est = latticewalk.survival_probability(spec, z, n, config.reps, rng, config.workers)
    se = math.sqrt(est * (1 - est) / config.reps)
    rows = [{"z": z, "n": n, "estimate": est, "stderr": se,
             "scaled_upper": est * math.sqrt(n) / (1 + abs(z)),
             "scaled_lower": est * math.sqrt(n) / abs(z) if z != 0 else None}]
    return ExperimentReport("survival", config.resolved(),
                            ["z", "n", "estimate", "stderr", "scaled_upper", "scaled_lower"],
                            rows, master_seed=config.master_seed)


def _run_localtime(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "z", "dist")
    _positive_reps(config)
    p = config.params
    spec = latticewalk.LatticeWalkSpec(parse_distribution(p["dist"]))
    cap = int(p.get("cap", 1_000_000))
    rng = RngStream(config.master_seed)
    rep = latticewalk.local_time_distribution(spec, int(p["z"]), config.reps, cap, rng, config.workers)
    rows = []
    for k, c in enumerate(rep.counts, start=1):
        rows.append({"visits": k, "frequency": int(c), "probability": c / rep.n_effective,
                     "mean": rep.mean if k == 1 else None,
                     "geometric_pvalue": rep.gof_pvalue if k == 1 else None,
                     "censored_fraction": rep.censored_fraction if k == 1 else None})
    return ExperimentReport("localtime", config.resolved(),
                            ["visits", "frequency", "probability", "mean",
                             "geometric_pvalue", "censored_fraction"],
                            rows, flags=rep.flags, master_seed=config.master_seed)


def _run_green(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "n", "dist")
    p = config.params
    spec = latticewalk.LatticeWalkSpec(parse_distribution(p["dist"]))
    ns = [int(x) for x in str(p["n"]).split(";")]
    rows = []
    for n in ns:
        g = latticewalk.green_function(spec, n)
        rows.append({"n": n, "green": g, "green_over_sqrt_n": g / math.sqrt(n)})
    return ExperimentReport("green", config.resolved(),
                            ["n", "green", "green_over_sqrt_n"], rows,
                            master_seed=config.master_seed,
                            extra={"plot_x": "n", "plot_y": "green"})


def _run_theta(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "z", "dist")
    _positive_reps(config)
    p = config.params
    spec = latticewalk.LatticeWalkSpec(parse_distribution(p["dist"]))
    zs = [int(x) for x in str(p["z"]).split(";")]
    rng = RngStream(config.master_seed)
    rows = []
    for z in zs:
        th = latticewalk.theta_of_z(spec, z, config.reps, rng, workers=config.workers)
        rows.append({"z": z, "theta": th, "theta_over_z2": th / z**2})
    return ExperimentReport("theta", config.resolved(), ["z", "theta", "theta_over_z2"],
                            rows, master_seed=config.master_seed)


def _run_pgp(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "z", "n", "dist")
    _positive_reps(config)
    p = config.params
    spec = latticewalk.LatticeWalkSpec(parse_distribution(p["dist"]))
    rng = RngStream(config.master_seed)
    rep = latticewalk.pgp_inequality_check(spec, int(p["z"]), int(p["n"]), config.reps, rng,
                                           workers=config.workers)
    rows = [{
        "z": rep.z, "n": rep.n, "lhs": rep.lhs, "rhs": rep.rhs,
        "relative_ci": rep.relative_ci, "slack_bound": rep.slack_bound, "passed": rep.passed,
    }]
    return ExperimentReport("pgp", config.resolved(),
                            ["z", "n", "lhs", "rhs", "relative_ci", "slack_bound", "passed"],
                            rows, master_seed=config.master_seed)


def _run_ou_sup(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "set", "z")
    _positive_reps(config)
    p = config.params
    E = parse_set_spec(p["set"])
    rng = RngStream(config.master_seed)
    br = ougauss.ou_sup_probability(E, float(p["z"]), config.reps, rng, config.workers)
    return report_from_brackets("ou-sup", config.resolved(), [br], config.master_seed,
                                flags=br.flags)


def _run_sheet_cov(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "u_grid", "t_grid")
    _positive_reps(config)
    p = config.params
    u_grid = [float(x) for x in p["u_grid"].split(";")]
    t_grid = [float(x) for x in p["t_grid"].split(";")]
    rng = RngStream(config.master_seed)
    rep = ougauss.sheet_covariance_experiment(u_grid, t_grid, config.reps, rng)
    rows = []
    for (u, t), (v, s), cov, th in rep.pairs:
        rows.append({"u": u, "t": t, "v": v, "s": s, "cov": cov, "cov_theory": th})
    return ExperimentReport("sheet-cov", config.resolved(),
                            ["u", "t", "v", "s", "cov", "cov_theory"], rows,
                            master_seed=config.master_seed)


def _run_stable_range(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "alpha", "eps", "p")
    _positive_reps(config)
    p = config.params
    eps_list = [float(x) for x in str(p["eps"]).split(";")]
    mesh = int(p.get("mesh", 100_000))
    rng = RngStream(config.master_seed)
    rep = stablerange.range_entropy_scaling(
        float(p["alpha"]), eps_list, int(p["p"]), config.reps, rng, mesh=mesh,
        workers=config.workers,
    )
    rows = [{"eps": e, "mean_Kp": mk, "alpha": rep.alpha, "p": rep.p,
             "slope": rep.slope if i == 0 else None,
             "target": rep.alpha * rep.p if i == 0 else None}
            for i, (e, mk) in enumerate(zip(rep.eps_list, rep.mean_kp))]
    return ExperimentReport("stable-range", config.resolved(),
                            ["eps", "mean_Kp", "alpha", "p", "slope", "target"], rows,
                            master_seed=config.master_seed,
                            extra={"plot_x": "eps", "plot_y": "mean_Kp"})


def _run_entropy(config: ExperimentConfig) -> ExperimentReport:
    _require(config, "set", "eps")
    p = config.params
    E = parse_set_spec(p["set"])
    eps_list = [float(x) for x in str(p["eps"]).split(";")]
    rows = [{"eps": e, "K": kolmogorov_entropy(E, e), "set": p["set"]} for e in eps_list]
    return ExperimentReport("entropy", config.resolved(), ["eps", "K", "set"], rows,
                            master_seed=config.master_seed,
                            extra={"plot_x": "eps", "plot_y": "K", "fit": "loglog_inverse"})


RUNNERS = {
    "genest": _run_genest,
    "invariance": _run_invariance,
    "recurrence": _run_recurrence,
    "chung": _run_chung,
    "tightness": _run_tightness,
    "ruin": _run_ruin,
    "survival": _run_survival,
    "localtime": _run_localtime,
    "green": _run_green,
    "theta": _run_theta,
    "pgp": _run_pgp,
    "ou-sup": _run_ou_sup,
    "sheet-cov": _run_sheet_cov,
    "stable-range": _run_stable_range,
    "entropy": _run_entropy,
}


def run(config: ExperimentConfig) -> ExperimentReport:
    """Validate, dispatch, time, and serialize one experiment."""
    if config.subcommand not in RUNNERS:
        raise ValidationError(f"unknown subcommand {config.subcommand!r}")
    t0 = time.perf_counter()
    report = RUNNERS[config.subcommand](config)
    report.wall_time_s = time.perf_counter() - t0
    if config.out:
        write_outputs(report, config.out, config.plotdata)
    return report


def write_outputs(report: ExperimentReport, out_path: str, plotdata: bool = False):
    base, ext = os.path.splitext(out_path)
    if ext == ".json":
        with open(out_path, "w") as fh:
            fh.write(report.to_json())
        with open(base + ".csv", "w") as fh:
            fh.write(report.to_csv())
    else:
        with open(out_path if ext == ".csv" else out_path + ".csv", "w") as fh:
            fh.write(report.to_csv())
        with open(base + ".json", "w") as fh:
            fh.write(report.to_json())
    if plotdata:
        pd = report.plot_data()
        if pd is not None:
            with open(base + ".dat", "w") as fh:
                fh.write(pd)


def summarize(reports: list) -> ExperimentReport:
    """One comparison table across reports of a shared subcommand.

    When the sweep declares a log-log fit (plot_x/plot_y in extra), a
    fitted slope of log(y) against log(1/x) is attached.
    """
    if not reports:
        raise ValidationError("summarize needs at least one report")
    subs = {r.subcommand for r in reports}
    if len(subs) != 1:
        raise ValidationError(f"summarize needs a single subcommand, got {sorted(subs)}")
    sub = subs.pop()
    rows = []
    for r in reports:
        for row in r.rows:
            rr = dict(row)
            rr["source_seed"] = r.master_seed
            rows.append(rr)
    columns = []
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    flags = []
    extra = {}
    xk = reports[0].extra.get("plot_x")
    yk = reports[0].extra.get("plot_y")
    xs, ys = [], []
    if xk and yk:
        for row in rows:
            x, y = row.get(xk), row.get(yk)
            if x and y:
                xs.append(float(x))
                ys.append(float(y))
    if len(xs) >= 2 and len(set(xs)) >= 2:
        slope = float(np.polyfit(np.log(1.0 / np.asarray(xs)), np.log(np.asarray(ys)), 1)[0])
        extra["fitted_slope_log_y_vs_log_inverse_x"] = slope
    else:
        flags.append("insufficient points for fit")
    return ExperimentReport(f"summary:{sub}", {"inputs": len(reports)}, columns, rows,
                            flags=tuple(flags), master_seed=reports[0].master_seed, extra=extra)
