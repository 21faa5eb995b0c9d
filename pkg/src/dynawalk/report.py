"""Report containers and their JSON/CSV encodings.

Numbers are rendered with repr (shortest round-trip, 17 significant
digits), so JSON and CSV carry identical values and re-parsing returns the
exact doubles.  CSV intentionally excludes wall time: a re-run with the
same seed and config must be byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

VERSION = "0.1.0"


def fmt(value) -> str:
    """Round-trip text form of one cell."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


@dataclass(frozen=True)
class BracketReport:
    """One Monte Carlo estimate next to its theoretical bracket."""

    name: str
    estimate: float
    stderr: float
    ci99: tuple
    reps: int
    seed: int
    theory_value: float | None = None
    ratio: float | None = None
    flags: tuple = ()
    extra: dict = field(default_factory=dict)

    @staticmethod
    def from_hits(name, hits, reps, seed, theory_value=None, flags=(), extra=None):
        p = hits / reps
        se = math.sqrt(p * (1.0 - p) / reps)
        half = 2.5758293035489004 * se  # two-sided 99%
        ratio = None
        if theory_value is not None and theory_value > 0.0:
            ratio = p / theory_value
        return BracketReport(
            name=name,
            estimate=p,
            stderr=se,
            ci99=(max(0.0, p - half), min(1.0, p + half)),
            reps=reps,
            seed=seed,
            theory_value=theory_value,
            ratio=ratio,
            flags=tuple(flags),
            extra=dict(extra or {}),
        )

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ci99_lo": self.ci99[0],
            "ci99_hi": self.ci99[1],
            "theory_value": self.theory_value,
            "ratio": self.ratio,
            "reps": self.reps,
            "seed": self.seed,
            "flags": ";".join(self.flags),
        }
        d.update(self.extra)
        return d


@dataclass
class ExperimentReport:
    """Full record of one experiment run: config, rows, flags, provenance."""

    subcommand: str
    config: dict
    columns: list
    rows: list  # list of dicts keyed by column names
    flags: tuple = ()
    master_seed: int = 0
    wall_time_s: float | None = None
    version: str = VERSION
    extra: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(fmt(row.get(c)) for c in self.columns))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "subcommand": self.subcommand,
            "version": self.version,
            "master_seed": self.master_seed,
            "config": _json_safe(self.config),
            "columns": self.columns,
            "rows": [_json_safe({c: r.get(c) for c in self.columns}) for r in self.rows],
            "flags": list(self.flags),
            "extra": _json_safe(self.extra),
            "wall_time_s": self.wall_time_s,
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"

    def plot_data(self) -> str | None:
        """Two-column gnuplot-ready text when the report declares a sweep."""
        xk = self.extra.get("plot_x")
        yk = self.extra.get("plot_y")
        if not xk or not yk:
            return None
        lines = [f"# {xk} {yk}"]
        for row in self.rows:
            if row.get(xk) is not None and row.get(yk) is not None:
                lines.append(f"{fmt(row[xk])} {fmt(row[yk])}")
        return "\n".join(lines) + "\n"


def report_from_brackets(subcommand, config, brackets, master_seed, flags=(), extra=None):
    rows = [b.to_dict() for b in brackets]
    columns = []
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    return ExperimentReport(
        subcommand=subcommand,
        config=config,
        columns=columns,
        rows=rows,
        flags=tuple(flags),
        master_seed=master_seed,
        extra=dict(extra or {}),
    )
