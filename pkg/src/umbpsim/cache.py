"""Three-level inclusive, set-associative data cache model.

Each set is a ``dict`` mapping tag to the line's prefetched bit; dict order
is recency order (first key is LRU, last key is MRU).  Every operation
keeps L1 within L2 within L3: an L3 victim is back-invalidated from L2 and
L1, and an L2 victim from L1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

LINE_BYTES = 64
LINE_SHIFT = 6
DEFAULT_MEMORY_LATENCY = 200


class CacheConfigError(ValueError):
    pass


class Level(enum.IntEnum):
    L1 = 1
    L2 = 2
    L3 = 3
    MEM = 4


@dataclass(frozen=True)
class LevelConfig:
    size_bytes: int
    associativity: int
    latency_cycles: int
    line_bytes: int = LINE_BYTES

    def validate(self) -> None:
        if self.line_bytes != LINE_BYTES:
            raise CacheConfigError("line size is fixed at 64 bytes")
        if self.size_bytes <= 0 or self.associativity <= 0:
            raise CacheConfigError("size and associativity must be positive")
        if self.latency_cycles < 0:
            raise CacheConfigError("latency must be non-negative")
        if self.size_bytes % (self.associativity * self.line_bytes):
            raise CacheConfigError(
                f"{self.size_bytes} B is not a multiple of "
                f"{self.associativity} ways x {self.line_bytes} B")
        sets = self.size_bytes // (self.associativity * self.line_bytes)
        if sets & (sets - 1):
            raise CacheConfigError(f"set count {sets} is not a power of two")


def geometry(cfg: LevelConfig) -> tuple[int, int]:
    """Return ``(sets, ways)``; a line maps to set ``line % sets``."""
    cfg.validate()
    return cfg.size_bytes // (cfg.associativity * cfg.line_bytes), cfg.associativity


@dataclass(frozen=True)
class HierarchyConfig:
    l1: LevelConfig = LevelConfig(16 * 1024, 8, 4)
    l2: LevelConfig = LevelConfig(128 * 1024, 8, 10)
    l3: LevelConfig = LevelConfig(2 * 1024 * 1024, 16, 20)
    memory_latency_cycles: int = DEFAULT_MEMORY_LATENCY

    def validate(self) -> None:
        for cfg in (self.l1, self.l2, self.l3):
            cfg.validate()
        if not self.l1.size_bytes <= self.l2.size_bytes <= self.l3.size_bytes:
            raise CacheConfigError("level sizes must be non-decreasing L1 -> L3")
        if self.memory_latency_cycles < 0:
            raise CacheConfigError("memory latency must be non-negative")


@dataclass(frozen=True)
class LineState:
    tag: int
    valid: bool
    prefetched: bool
    lru_age: int


@dataclass(frozen=True)
class AccessOutcome:
    hit_level: Level
    latency_cycles: int
    l2_hit: bool
    consumed_prefetch: bool


@dataclass
class LevelCounters:
    accesses: int = 0
    hits: int = 0
    misses: int = 0
    evictions: int = 0
    back_invalidations: int = 0


class CacheLevel:
    def __init__(self, cfg: LevelConfig, name: str = ""):
        self.sets_count, self.ways = geometry(cfg)
        self.latency = cfg.latency_cycles
        self.name = name
        self.sets: list[dict[int, bool]] = [{} for _ in range(self.sets_count)]
        self.counters = LevelCounters()

    def _locate(self, line: int) -> tuple[dict[int, bool], int]:
        return self.sets[line % self.sets_count], line // self.sets_count

    def lookup(self, line: int):
        """Prefetched bit of ``line`` if present, else ``None``.  No LRU update."""
        s, tag = self._locate(line)
        return s.get(tag)

    def __contains__(self, line: int) -> bool:
        s, tag = self._locate(line)
        return tag in s

    def touch(self, line: int) -> None:
        s, tag = self._locate(line)
        s[tag] = s.pop(tag)

    def clear_prefetched(self, line: int) -> None:
        s, tag = self._locate(line)
        if tag in s:
            s[tag] = False

    def insert(self, line: int, prefetched: bool = False):
        """Insert ``line`` as MRU; return the evicted line number or ``None``."""
        idx = line % self.sets_count
        s = self.sets[idx]
        tag = line // self.sets_count
        victim = None
        if tag in s:
            del s[tag]
        elif len(s) >= self.ways:
            vtag = next(iter(s))
            del s[vtag]
            victim = vtag * self.sets_count + idx
            self.counters.evictions += 1
        s[tag] = prefetched
        return victim

    def invalidate(self, line: int) -> bool:
        s, tag = self._locate(line)
        if tag in s:
            del s[tag]
            return True
        return False

    def set_state(self, index: int) -> list[LineState]:
        """Valid lines of one set, ``lru_age`` 0 for the MRU line."""
        s = self.sets[index]
        n = len(s)
        return [LineState(tag, True, pf, n - 1 - pos)
                for pos, (tag, pf) in enumerate(s.items())]

    def resident_lines(self) -> set[int]:
        n = self.sets_count
        return {tag * n + idx for idx, s in enumerate(self.sets) for tag in s}


class Hierarchy:
    def __init__(self, cfg: HierarchyConfig | None = None):
        cfg = cfg or HierarchyConfig()
        cfg.validate()
        self.config = cfg
        self.l1 = CacheLevel(cfg.l1, "L1")
        self.l2 = CacheLevel(cfg.l2, "L2")
        self.l3 = CacheLevel(cfg.l3, "L3")
        self.levels = (self.l1, self.l2, self.l3)

    def _fill(self, level: CacheLevel, line: int, prefetched: bool) -> None:
        victim = level.insert(line, prefetched)
        if victim is None:
            return
        # inclusion: drop the victim from every smaller level
        for upper in self.levels[:self.levels.index(level)]:
            if upper.invalidate(victim):
                upper.counters.back_invalidations += 1

    def demand_access(self, addr: int, kind=None) -> AccessOutcome:
        """Demand load or store of byte address ``addr``; loads and stores are
        treated alike."""
        line = addr >> LINE_SHIFT
        hit_idx = 3
        for i, level in enumerate(self.levels):
            level.counters.accesses += 1
            if line in level:
                level.counters.hits += 1
                hit_idx = i
                break
            level.counters.misses += 1

        consumed = False
        if hit_idx < 3:
            satisfying = self.levels[hit_idx]
            consumed = bool(satisfying.lookup(line))
            satisfying.touch(line)
            if consumed:
                for level in self.levels[hit_idx:]:
                    level.clear_prefetched(line)
            latency = satisfying.latency
        else:
            latency = self.config.memory_latency_cycles
        for level in reversed(self.levels[:hit_idx]):
            self._fill(level, line, False)
        return AccessOutcome(Level(hit_idx + 1), latency, hit_idx == 1, consumed)

    def present_at_or_below(self, line: int, level: Level) -> bool:
        """True if ``line`` is in ``level`` or any larger level."""
        return any(line in lv for lv in self.levels[level - 1:])

    def prefetch_fill(self, line: int, level: Level) -> bool:
        """Install ``line`` at L2 (and L3 for inclusion) or at L3 only,
        marked prefetched.  No-op if already at ``level`` or deeper."""
        level = Level(level)
        if level not in (Level.L2, Level.L3):
            raise ValueError("prefetches fill L2 or L3")
        if self.present_at_or_below(line, level):
            return False
        if level is Level.L2:
            self._fill(self.l3, line, True)
            self._fill(self.l2, line, True)
        else:
            self._fill(self.l3, line, True)
        return True

    def snapshot_counters(self) -> dict[str, LevelCounters]:
        return {lv.name: LevelCounters(**vars(lv.counters)) for lv in self.levels}

    def check_inclusive(self) -> bool:
        l1, l2, l3 = (lv.resident_lines() for lv in self.levels)
        return l1 <= l2 <= l3
