"""Usage-and-miss-based prefetcher (UMBP).

A 128-entry instruction table, indexed by instruction pointer, tracks for
each load/store instruction its last line, last line delta, current stream
length and L2 reference/miss counts.  Every L2 access by a tracked
instruction runs the pipeline::

    lookup_or_allocate -> detect_pattern -> classify_usage
        -> classify_miss -> select_degree -> generate_candidates

Usage is rank-based: an instruction is *common* when fewer than
``common_count`` table entries have a strictly larger reference count.
Miss behaviour is relative: the instruction's L2 miss rate is compared with
a sample made of the ``common_count`` most-referenced entries plus
``sample_uncommon`` entries drawn at random from the rest.  It is a *low*
miss instruction when its rate is strictly below at least
``ceil(threshold * |sample|)`` sampled rates.

The degree matrix::

                 low miss   high miss
    common       d_std      d_high
    uncommon     d_low      d_std
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from operator import attrgetter
from typing import Optional

from .rng import SplitMix64

ENTRY_BITS = 203
SAMPLE_ENTRY_BITS = 64
CLAIMED_TOTAL_BITS = 32768
CLAIMED_TABLE_BYTES = 21924

DELTA_MIN, DELTA_MAX = -32, 31
STREAM_LEN_MAX = 31
LRU_AGE_MAX = 63
COUNTER_MAX = (1 << 32) - 1
DEFAULT_SEED = 0x5EED


class Usage(enum.Enum):
    COMMON = "common"
    UNCOMMON = "uncommon"


class MissClass(enum.Enum):
    LOW = "low"
    HIGH = "high"


class PatternKind(enum.Enum):
    NONE = "none"
    STREAM = "stream"
    STRIDE = "stride"
    STREAM_STRIDE = "stream_stride"


@dataclass(frozen=True)
class PatternClass:
    kind: PatternKind
    direction: int = 0
    # stream_stride only: distance between consecutive run starts, and the
    # length in lines of the run just completed
    jump: int = 0
    run_len: int = 0


NO_PATTERN = PatternClass(PatternKind.NONE)


@dataclass
class UmbpParams:
    table_entries: int = 128
    common_count: int = 50
    sample_uncommon: int = 20
    threshold: float = 0.375
    d_low: int = 1
    d_std: int = 4
    d_high: int = 8
    seed: int = DEFAULT_SEED

    def validate(self) -> None:
        if self.table_entries < 1:
            raise ValueError("table_entries out of range")
        if self.common_count < 0 or self.sample_uncommon < 0:
            raise ValueError("sample sizes must be non-negative")
        if self.common_count + self.sample_uncommon > self.table_entries:
            raise ValueError("common_count + sample_uncommon exceeds the table")
        if not 0 < self.threshold <= 1:
            raise ValueError("threshold must lie in (0, 1]")
        if not 0 < self.d_low <= self.d_std <= self.d_high:
            raise ValueError("degrees must satisfy 0 < d_low <= d_std <= d_high")


@dataclass
class InstructionEntry:
    ip: int
    last_line: Optional[int] = None
    last_delta: int = 0
    delta_valid: bool = False
    stream_len: int = 0
    miss_count: int = 0
    ref_count: int = 0
    lru_age: int = 0

    def miss_rate(self) -> float:
        return self.miss_count / self.ref_count if self.ref_count else 0.0


class InstructionTable:
    """Fixed slots; replacement evicts the largest ``lru_age``, lowest slot
    on ties (ages saturate at 63, so ties occur once the table is full)."""

    def __init__(self, entries: int = 128):
        self.capacity = entries
        self.slots: list[Optional[InstructionEntry]] = [None] * entries
        self.index: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.index)

    def get(self, ip: int) -> InstructionEntry:
        try:
            return self.slots[self.index[ip]]
        except KeyError:
            raise LookupError(f"ip {ip:#x} is not tracked") from None

    def __contains__(self, ip: int) -> bool:
        return ip in self.index

    def entries(self) -> list[tuple[int, InstructionEntry]]:
        return [(i, e) for i, e in enumerate(self.slots) if e is not None]

    def _age_others(self, keep: InstructionEntry) -> None:
        for e in self.slots:
            if e is not None and e is not keep and e.lru_age < LRU_AGE_MAX:
                e.lru_age += 1

    def _victim_slot(self) -> int:
        if len(self.index) < self.capacity:
            return self.slots.index(None)
        best = 0
        for i, e in enumerate(self.slots):
            if e.lru_age > self.slots[best].lru_age:
                best = i
        return best

    def lookup_or_allocate(self, ip: int, l2_miss: bool) -> InstructionEntry:
        slot = self.index.get(ip)
        if slot is not None:
            entry = self.slots[slot]
            if entry.ref_count < COUNTER_MAX:
                entry.ref_count += 1
                entry.miss_count += bool(l2_miss)
        else:
            slot = self._victim_slot()
            old = self.slots[slot]
            if old is not None:
                del self.index[old.ip]
            entry = InstructionEntry(ip, ref_count=1, miss_count=int(bool(l2_miss)))
            self.slots[slot] = entry
            self.index[ip] = slot
        entry.lru_age = 0
        self._age_others(entry)
        return entry


def lookup_or_allocate(table: InstructionTable, ip: int, l2_miss: bool) -> InstructionEntry:
    return table.lookup_or_allocate(ip, l2_miss)


def detect_pattern(entry: InstructionEntry, line: int) -> PatternClass:
    """Classify this access against the entry's history and update it."""
    if entry.last_line is None:
        entry.last_line = line
        return NO_PATTERN
    delta = line - entry.last_line
    entry.last_line = line
    if delta == 0:
        return NO_PATTERN
    matches = entry.delta_valid and delta == entry.last_delta
    if abs(delta) == 1:
        if matches:
            entry.stream_len = min(entry.stream_len + 1, STREAM_LEN_MAX)
            return PatternClass(PatternKind.STREAM, direction=delta)
        entry.stream_len = 1
        entry.last_delta = delta
        entry.delta_valid = True
        return NO_PATTERN
    if not DELTA_MIN <= delta <= DELTA_MAX:
        entry.delta_valid = False
        entry.stream_len = 0
        return NO_PATTERN
    if matches:
        return PatternClass(PatternKind.STRIDE, direction=1 if delta > 0 else -1)
    if (entry.stream_len >= 2 and entry.delta_valid and entry.last_delta == 1):
        # the ascending run covered stream_len + 1 lines and began
        # stream_len lines before the previous access
        run_len = entry.stream_len + 1
        jump = delta + entry.stream_len
        entry.last_delta = delta
        return PatternClass(PatternKind.STREAM_STRIDE, direction=1,
                            jump=jump, run_len=run_len)
    entry.last_delta = delta
    entry.delta_valid = True
    entry.stream_len = 0
    return NO_PATTERN


def classify_usage(table: InstructionTable, ip: int,
                   params: UmbpParams | None = None) -> Usage:
    limit = (params or UmbpParams()).common_count
    me = table.get(ip).ref_count
    above = sum(1 for e in table.slots if e is not None and e.ref_count > me)
    return Usage.COMMON if above < limit else Usage.UNCOMMON


def comparison_sample(table: InstructionTable, ip: int, params: UmbpParams,
                      rng: SplitMix64) -> list[InstructionEntry]:
    """The most-referenced ``common_count`` entries plus ``sample_uncommon``
    random others, never including ``ip`` itself."""
    me = table.get(ip)
    # slot order in, stable sort: ties keep the lower slot first
    others = [e for e in table.slots if e is not None and e is not me]
    others.sort(key=_by_refs, reverse=True)
    top = others[:params.common_count]
    return top + rng.sample(others[params.common_count:], params.sample_uncommon)


_by_refs = attrgetter("ref_count")


@lru_cache(maxsize=None)
def _required_lower(threshold: float, n: int) -> int:
    return math.ceil(Fraction(str(threshold)) * n)


def classify_miss(table: InstructionTable, ip: int, params: UmbpParams,
                  rng: SplitMix64) -> MissClass:
    me = table.get(ip)
    sample = comparison_sample(table, ip, params, rng)
    if not sample:
        return MissClass.HIGH
    # rate(me) < rate(s), compared exactly by cross-multiplication
    lower = sum(1 for s in sample
                if me.miss_count * s.ref_count < s.miss_count * me.ref_count)
    if lower >= _required_lower(params.threshold, len(sample)):
        return MissClass.LOW
    return MissClass.HIGH


def select_degree(usage: Usage, miss: MissClass, params: UmbpParams) -> int:
    if usage is Usage.COMMON:
        return params.d_high if miss is MissClass.HIGH else params.d_std
    return params.d_std if miss is MissClass.HIGH else params.d_low


def generate_candidates(entry: InstructionEntry, pattern: PatternClass,
                        degree: int) -> list[int]:
    line = entry.last_line
    kind = pattern.kind
    if kind is PatternKind.STREAM or kind is PatternKind.STRIDE:
        step = entry.last_delta
        return [line + k * step for k in range(1, degree + 1)]
    if kind is PatternKind.STREAM_STRIDE:
        in_run = min(pattern.run_len - 1, degree)
        out = [line + k for k in range(1, in_run + 1)]
        nxt = line + pattern.jump
        out.extend(nxt + k for k in range(degree - in_run))
        return out
    return []


@dataclass(frozen=True)
class StorageReport:
    table_entries: int
    entry_bits: int
    main_bits: int
    sample_entries: int
    sample_bits: int
    total_bits: int
    claimed_total_bits: int = CLAIMED_TOTAL_BITS
    claimed_table_bytes: int = CLAIMED_TABLE_BYTES

    @property
    def matches_claim(self) -> bool:
        return self.total_bits == self.claimed_total_bits

    def lines(self) -> list[str]:
        out = [
            f"instruction table: {self.table_entries} x {self.entry_bits} bits"
            f" = {self.main_bits} bits ({self.main_bits // 8} bytes)",
            f"comparison sample: {self.sample_entries} x {SAMPLE_ENTRY_BITS} bits"
            f" = {self.sample_bits} bits",
            f"total: {self.total_bits} bits",
        ]
        if not self.matches_claim:
            out.append(
                f"note: published budget is {self.claimed_total_bits} bits total"
                f" and {self.claimed_table_bytes} bytes for the table;"
                f" computed total differs by"
                f" {self.claimed_total_bits - self.total_bits} bits")
        return out


def storage_report(params: UmbpParams | None = None) -> StorageReport:
    params = params or UmbpParams()
    main = params.table_entries * ENTRY_BITS
    n_sample = params.common_count + params.sample_uncommon
    sample = n_sample * SAMPLE_ENTRY_BITS
    return StorageReport(params.table_entries, ENTRY_BITS, main, n_sample,
                         sample, main + sample)


class UMBP:
    def __init__(self, params: UmbpParams | None = None):
        self.params = params or UmbpParams()
        self.params.validate()
        self.table = InstructionTable(self.params.table_entries)
        self.rng = SplitMix64(self.params.seed)
        self.last_degree = 0

    def name(self) -> str:
        return "umbp"

    def storage_bits(self) -> int:
        return storage_report(self.params).total_bits

    def observe(self, ip: int, line: int, l2_hit: bool) -> list[int]:
        entry = self.table.lookup_or_allocate(ip, not l2_hit)
        pattern = detect_pattern(entry, line)
        if pattern.kind is PatternKind.NONE:
            return []
        usage = classify_usage(self.table, ip, self.params)
        miss = classify_miss(self.table, ip, self.params, self.rng)
        self.last_degree = select_degree(usage, miss, self.params)
        return generate_candidates(entry, pattern, self.last_degree)
