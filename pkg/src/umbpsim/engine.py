"""Trace-driven simulation loop.

The timing model is deliberately simple: records are processed in order and
each one costs ``ceil((gap + 1) / issue_width)`` front-end cycles plus the
full latency of the level that satisfied it.  There is no overlap between
misses, so absolute IPC is only meaningful relative to another prefetcher
run on the same trace and configuration.

Prefetchers see L2 traffic only (demand accesses that missed L1).
Prefetches fill instantly.  Whether a prefetch lands in L2 or L3 is decided
by an occupancy proxy: the number of prefetches issued during the last
``occupancy_window`` demand accesses.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .cache import (AccessOutcome, Hierarchy, HierarchyConfig, Level,
                    LevelCounters)
from .trace import LINE_SHIFT, TraceRecord, encode_trace


class Prefetcher(Protocol):
    def name(self) -> str: ...

    def observe(self, ip: int, line: int, l2_hit: bool) -> Sequence[int]:
        """Candidate lines for this L2 access, nearest first."""
        ...

    def storage_bits(self) -> int: ...


@dataclass(frozen=True)
class EngineConfig:
    issue_width: int = 6
    occupancy_window: int = 32
    occupancy_threshold: int = 96
    max_candidates_per_access: int = 16

    def validate(self) -> None:
        for name, value in vars(self).items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")


@dataclass
class SimStats:
    instructions: int = 0
    cycles: int = 0
    levels: dict[str, LevelCounters] = field(default_factory=lambda: {
        name: LevelCounters() for name in ("L1", "L2", "L3")})
    prefetches_issued: int = 0
    prefetches_filled: int = 0
    prefetches_useful: int = 0
    fills_l2: int = 0
    fills_l3: int = 0
    digest: str = ""

    def misses(self, level: str) -> int:
        return self.levels[level].misses


class OccupancyWindow:
    """Prefetch issue counts over the most recent demand accesses."""

    def __init__(self, window: int):
        self._slots: deque[int] = deque([0] * window, maxlen=window)
        self.count = 0

    def advance(self) -> None:
        self.count -= self._slots[0]
        self._slots.append(0)

    def record(self, n: int = 1) -> None:
        self._slots[-1] += n
        self.count += n


def l1_filter(outcome: AccessOutcome) -> bool:
    return outcome.hit_level is not Level.L1


def issue_prefetches(candidates: Iterable[int], hier: Hierarchy,
                     window: OccupancyWindow, config: EngineConfig,
                     stats: SimStats | None = None) -> int:
    """Issue candidate lines, choosing L2 or L3 per candidate by occupancy.

    Candidates beyond ``max_candidates_per_access``, negative lines and lines
    already resident at the chosen level or deeper are dropped.
    """
    issued = 0
    for i, line in enumerate(candidates):
        if i >= config.max_candidates_per_access:
            break
        if line < 0:
            continue
        level = Level.L2 if window.count < config.occupancy_threshold else Level.L3
        if hier.present_at_or_below(line, level):
            continue
        filled = hier.prefetch_fill(line, level)
        window.record()
        issued += 1
        if stats is not None:
            stats.prefetches_issued += 1
            if filled:
                stats.prefetches_filled += 1
                if level is Level.L2:
                    stats.fills_l2 += 1
                else:
                    stats.fills_l3 += 1
    return issued


def run_digest(trace: Sequence[TraceRecord], hier_config: HierarchyConfig,
               engine_config: EngineConfig) -> str:
    h = hashlib.sha256(encode_trace(trace))
    h.update(repr((hier_config, engine_config)).encode())
    return h.hexdigest()[:16]


def run(trace: Sequence[TraceRecord], prefetcher: Prefetcher | None = None,
        hier_config: HierarchyConfig | None = None,
        engine_config: EngineConfig | None = None) -> SimStats:
    hier_config = hier_config or HierarchyConfig()
    engine_config = engine_config or EngineConfig()
    engine_config.validate()
    hier = Hierarchy(hier_config)
    window = OccupancyWindow(engine_config.occupancy_window)
    stats = SimStats()
    width = engine_config.issue_width
    access = hier.demand_access

    for rec in trace:
        insns = rec.gap + 1
        stats.cycles += -(-insns // width)
        window.advance()
        outcome = access(rec.addr, rec.kind)
        stats.cycles += outcome.latency_cycles
        if outcome.consumed_prefetch:
            stats.prefetches_useful += 1
        if prefetcher is not None and outcome.hit_level is not Level.L1:
            candidates = prefetcher.observe(rec.ip, rec.addr >> LINE_SHIFT,
                                            outcome.l2_hit)
            if candidates:
                issue_prefetches(candidates, hier, window, engine_config, stats)
        stats.instructions += insns

    stats.levels = hier.snapshot_counters()
    stats.digest = run_digest(trace, hier_config, engine_config)
    return stats
