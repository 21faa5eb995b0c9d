"""dynawalk command line: every experiment behind one seeded entry point.

Exit codes: 0 ok, 2 validation, 3 resource, 4 inconclusive verdict,
5 failed hard assertion.  Flags inside reports never change the exit code.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import (
    HardAssertionError,
    InconclusiveError,
    ResourceError,
    ValidationError,
)
from .harness import RUNNERS, ExperimentConfig, run, summarize, write_outputs
from .report import ExperimentReport

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_INCONCLUSIVE = 4
EXIT_ASSERTION = 5

# subcommand -> (parameter names, one-line help)
_PARAMS = {
    "genest": (["n", "z", "set", "dist"], "sup-threshold bracket for S_n over a set"),
    "invariance": (["n", "u_grid", "t_grid", "dist"], "field covariance and marginals"),
    "recurrence": (["n", "dist"], "worst-piece return counts to zero"),
    "chung": (["n", "eps"], "small-deviation inf event over the time window"),
    "tightness": (["n", "dist"], "second moment of the running maximum"),
    "ruin": (["z", "dist", "cap"], "first-passage probability to z before returning to 0"),
    "survival": (["z", "n", "dist"], "probability of avoiding 0 for n steps"),
    "localtime": (["z", "dist", "cap"], "zero-visit law before the passage to z"),
    "green": (["n", "dist"], "expected visits to zero (exact convolution)"),
    "theta": (["z", "dist"], "dyadic horizon where passage survival drops below 1/8"),
    "pgp": (["z", "n", "dist", "cap"], "last-exit survival bound check"),
    "ou-sup": (["set", "z"], "sup-threshold bracket for the stationary Gaussian process"),
    "sheet-cov": (["u_grid", "t_grid"], "field covariance from the sheet construction"),
    "stable-range": (["alpha", "eps", "p", "mesh"], "packing scaling of a stable range"),
    "entropy": (["set", "eps"], "packing counts of a set over an eps grid"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dynawalk", description=__doc__)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, (params, help_text) in _PARAMS.items():
        sp = sub.add_parser(name, help=help_text)
        for p in params:
            sp.add_argument(f"--{p.replace('_', '-')}", dest=p, type=str, default=None)
        _add_global_flags(sp)
    sp = sub.add_parser("summarize", help="combine reports of one subcommand into a table")
    sp.add_argument("inputs", nargs="+", help="JSON report files")
    sp.add_argument("--out", type=str, default=None)
    sp.add_argument("--plotdata", action="store_true")
    return ap


def _add_global_flags(sp):
    # None means "not given on the CLI": the config file may fill it in
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--reps", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--out", type=str, default=None)
    sp.add_argument("--config", type=str, default=None)
    sp.add_argument("--plotdata", action="store_true")


def load_report(path: str) -> ExperimentReport:
    with open(path) as fh:
        doc = json.load(fh)
    return ExperimentReport(
        subcommand=doc["subcommand"],
        config=doc.get("config", {}),
        columns=doc["columns"],
        rows=doc["rows"],
        flags=tuple(doc.get("flags", ())),
        master_seed=doc.get("master_seed", 0),
        extra=doc.get("extra", {}),
        version=doc.get("version", ""),
    )


def _config_from_args(args) -> ExperimentConfig:
    """CLI flags override the config file; built-in defaults fill the rest."""
    params = {}
    file_cfg = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        for k, v in file_cfg.items():
            if k not in ("seed", "reps", "workers"):
                params[k] = v
    for p in _PARAMS[args.subcommand][0]:
        v = getattr(args, p, None)
        if v is not None:
            params[p] = v

    def pick(cli_value, key, default):
        if cli_value is not None:
            return cli_value
        return int(file_cfg[key]) if key in file_cfg else default

    return ExperimentConfig(
        subcommand=args.subcommand,
        params=params,
        master_seed=pick(args.seed, "seed", 1),
        reps=pick(args.reps, "reps", 10000),
        workers=pick(args.workers, "workers", 1),
        out=args.out,
        plotdata=args.plotdata,
    )


def _report_exit_code(report: ExperimentReport) -> int:
    for row in report.rows:
        for key in ("passed", "within_bound"):
            if key in row and row[key] is False:
                return EXIT_ASSERTION
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.subcommand == "summarize":
            reports = [load_report(p) for p in args.inputs]
            table = summarize(reports)
            if args.out:
                write_outputs(table, args.out, args.plotdata)
            else:
                sys.stdout.write(table.to_csv())
            return EXIT_OK
        config = _config_from_args(args)
        report = run(config)
        if not config.out:
            sys.stdout.write(report.to_csv())
        return _report_exit_code(report)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ResourceError, OverflowError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except HardAssertionError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
