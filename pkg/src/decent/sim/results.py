"""Per-trial records, summary statistics and CSV output."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

from scipy import stats as _stats

CSV_COLUMNS = (
    "experiment",
    "trial",
    "param",
    "value",
    "sim_ms",
    "wall_ms",
    "dht_gets",
    "dht_puts",
    "appends",
    "policy_decrypts",
    "failures",
)

AGGREGATE_COLUMNS = (
    "experiment",
    "param",
    "value",
    "trials",
    "sim_ms_mean",
    "sim_ms_ci_low",
    "sim_ms_ci_high",
    "dht_gets_mean",
    "dht_puts_mean",
    "appends_mean",
    "policy_decrypts_mean",
    "failures_total",
)


@dataclass
class TrialRecord:
    experiment: str
    trial: int
    param: str
    value: str
    sim_ms: float
    wall_ms: float
    dht_gets: int
    dht_puts: int
    appends: int
    policy_decrypts: int
    failures: int

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


def mean_ci(samples: Sequence[float], confidence: float = 0.95) -> tuple[float, float, float]:
    """Mean and Student-t confidence interval."""
    n = len(samples)
    if n == 0:
        raise ValueError("no samples")
    m = statistics.fmean(samples)
    if n == 1:
        return m, m, m
    half = _stats.t.ppf((1 + confidence) / 2, n - 1) * statistics.stdev(samples) / math.sqrt(n)
    return m, m - half, m + half


@dataclass
class ExperimentResult:
    experiment: str
    param: str
    value: str
    trials: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        return [getattr(t, name) for t in self.trials]

    @property
    def sim_ms(self) -> list[float]:
        return self.column("sim_ms")

    def summary(self) -> dict:
        m, lo, hi = mean_ci(self.sim_ms)
        out = {
            "experiment": self.experiment,
            "param": self.param,
            "value": self.value,
            "trials": len(self.trials),
            "sim_ms_mean": m,
            "sim_ms_ci_low": lo,
            "sim_ms_ci_high": hi,
        }
        for name in ("dht_gets", "dht_puts", "appends", "policy_decrypts"):
            out[f"{name}_mean"] = statistics.fmean(self.column(name))
        out["failures_total"] = sum(self.column("failures"))
        return out

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "param": self.param,
            "value": self.value,
            "trials": [asdict(t) for t in self.trials],
            "extra": self.extra,
        }


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def trials_csv(results: Iterable[ExperimentResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for res in results:
        for t in res.trials:
            w.writerow([_fmt(v) for v in t.row()])
    return buf.getvalue()


def aggregate_csv(results: Iterable[ExperimentResult]) -> str:
    """Figure-ready rows: x = ``value``, y = mean simulated time with CI. No wall-clock data."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_COLUMNS)
    for res in results:
        s = res.summary()
        w.writerow([_fmt(s[c]) for c in AGGREGATE_COLUMNS])
    return buf.getvalue()


def emit_results(results: Sequence[ExperimentResult], out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``trials.csv`` (one row per trial), ``aggregate.csv``, and ``extra.json`` when results carry extras."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trials_path = out / "trials.csv"
    agg_path = out / "aggregate.csv"
    trials_path.write_text(trials_csv(results))
    agg_path.write_text(aggregate_csv(results))
    extras = [{"experiment": r.experiment, "value": r.value, **r.extra} for r in results if r.extra]
    if extras:
        (out / "extra.json").write_text(json.dumps(extras, indent=1, sort_keys=True) + "\n")
    return trials_path, agg_path


def record_field_names() -> list[str]:
    return [f.name for f in fields(TrialRecord)]
