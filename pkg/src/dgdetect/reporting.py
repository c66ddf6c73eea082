"""Flagged-cell bookkeeping: per-step history and Ave/Max summaries.

One report per run.  Every accepted time step contributes one record
(step index, time, flagged count, flagged percentage); the summary keeps
the running mean and max of the percentages so streaming matches a batch
recomputation exactly.  Outputs are plain text: a CSV time history with
17-significant-digit floats and a JSON summary with sorted keys, both
byte-stable for identical inputs (wall_seconds is the one field that
varies between runs).
"""

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path


@dataclass
class StepRecord:
    step: int
    time: float
    flagged: int
    percent: float


@dataclass
class RunReport:
    """Streaming Ave/Max accumulator plus the full step history."""

    config: dict = dc_field(default_factory=dict)
    n_elements: int = 0
    records: list = dc_field(default_factory=list)
    wall_seconds: float = None
    _percent_sum: float = 0.0
    _percent_max: float = None

    @property
    def n_steps(self):
        return len(self.records)

    @property
    def average_percent(self):
        if not self.records:
            return None
        return self._percent_sum / len(self.records)

    @property
    def max_percent(self):
        return self._percent_max

    def summary(self):
        return {"config": self.config,
                "ave": self.average_percent,
                "max": self.max_percent,
                "steps": self.n_steps,
                "wall_seconds": self.wall_seconds}


def accumulate(report, flags, n_elements=None):
    """Append one step's flags; keeps the running summary in sync."""
    n = report.n_elements if n_elements is None else int(n_elements)
    if report.n_elements == 0:
        report.n_elements = n
    count = int(flags.count)
    percent = 100.0 * count / n
    step = flags.step if getattr(flags, "step", None) is not None \
        else len(report.records)
    report.records.append(StepRecord(step=int(step), time=float(flags.time),
                                     flagged=count, percent=percent))
    report._percent_sum += percent
    report._percent_max = percent if report._percent_max is None \
        else max(report._percent_max, percent)
    return report


def recompute_summary(report):
    """Batch recomputation, the oracle the streaming path must match."""
    pct = [r.percent for r in report.records]
    if not pct:
        return None, None
    return sum(pct) / len(pct), max(pct)


def write_history_csv(report, path):
    lines = ["step,time,flagged,percent"]
    for r in report.records:
        lines.append(f"{r.step},{r.time:.17g},{r.flagged},{r.percent:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_history_csv(path):
    """Parse a history CSV back into StepRecord rows."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != "step,time,flagged,percent":
        raise ValueError(f"{path} is not a flag-history CSV")
    out = []
    for line in lines[1:]:
        s, t, f, p = line.split(",")
        out.append(StepRecord(step=int(s), time=float(t), flagged=int(f),
                              percent=float(p)))
    return out


def write_summary_json(report, path):
    Path(path).write_text(
        json.dumps(report.summary(), sort_keys=True, indent=2) + "\n")


def read_summary_json(path):
    return json.loads(Path(path).read_text())
