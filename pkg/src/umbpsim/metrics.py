"""Derived metrics and CSV output for simulation runs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from .engine import SimStats

CSV_COLUMNS = ("name", "instructions", "cycles", "ipc", "l1_misses",
               "l2_misses", "l3_misses", "issued", "useful", "accuracy",
               "coverage")


class ComparabilityError(ValueError):
    """Runs were made on different traces or configurations."""


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class RunSummary:
    name: str
    digest: str
    stats: SimStats
    ipc: float
    l2_miss_rate: float
    l3_miss_rate: float
    accuracy: float
    coverage: Optional[float] = None

    @property
    def l2_misses(self) -> int:
        return self.stats.misses("L2")


def summarize(stats: SimStats, name: str) -> RunSummary:
    l2, l3 = stats.levels["L2"], stats.levels["L3"]
    return RunSummary(
        name=name,
        digest=stats.digest,
        stats=stats,
        ipc=_ratio(stats.instructions, stats.cycles),
        l2_miss_rate=_ratio(l2.misses, l2.accesses),
        l3_miss_rate=_ratio(l3.misses, l3.accesses),
        accuracy=_ratio(stats.prefetches_useful, stats.prefetches_issued),
    )


def coverage(run: RunSummary, baseline: RunSummary) -> float:
    """Fraction of the baseline's L2 demand misses that ``run`` removed.

    Negative when the run misses more than the baseline (pollution).
    """
    if run.digest != baseline.digest:
        raise ComparabilityError(
            f"{run.name} and {baseline.name} ran on different trace/config")
    base = baseline.l2_misses
    if base == 0:
        return 0.0
    return (base - run.l2_misses) / base


def with_coverage(run: RunSummary, baseline: RunSummary) -> RunSummary:
    return replace(run, coverage=coverage(run, baseline))


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def csv_row(s: RunSummary) -> list[str]:
    st = s.stats
    return [s.name, str(st.instructions), str(st.cycles), _fmt(s.ipc),
            str(st.misses("L1")), str(st.misses("L2")), str(st.misses("L3")),
            str(st.prefetches_issued), str(st.prefetches_useful),
            _fmt(s.accuracy), "" if s.coverage is None else _fmt(s.coverage)]


def to_csv(summaries: Iterable[RunSummary],
           extra_columns: Sequence[str] = (),
           extra_values: Sequence[Sequence[str]] = ()) -> str:
    """Render summaries as CSV text with a fixed column order.

    ``extra_columns`` are prepended (the sweep uses them for its grid
    parameters); ``extra_values`` supplies one sequence per summary.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*extra_columns, *CSV_COLUMNS])
    summaries = list(summaries)
    extras = list(extra_values) or [()] * len(summaries)
    for s, extra in zip(summaries, extras, strict=True):
        w.writerow([*extra, *csv_row(s)])
    return buf.getvalue()
