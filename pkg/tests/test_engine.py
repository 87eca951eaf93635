import math

import pytest

from umbpsim.baselines import NextLine, Skeleton
from umbpsim.cache import AccessOutcome, Hierarchy, Level
from umbpsim.engine import (EngineConfig, OccupancyWindow, SimStats, issue_prefetches,
                            l1_filter, run)
from umbpsim.trace import Pattern, PatternSpec, TraceRecord, generate, mixed_workload
from umbpsim.umbp import UMBP


class Scripted:
    """Returns fixed candidate lists, recording what it was shown."""

    def __init__(self, fn):
        self.fn = fn
        self.seen = []

    def name(self):
        return "scripted"

    def storage_bits(self):
        return 0

    def observe(self, ip, line, l2_hit):
        self.seen.append((ip, line, l2_hit))
        return self.fn(line)


def test_empty_trace():
    s = run([], Skeleton())
    assert (s.instructions, s.cycles, s.prefetches_issued) == (0, 0, 0)
    assert all(c.accesses == 0 for c in s.levels.values())


def test_cold_stream_skeleton():
    s = run(generate(PatternSpec(Pattern.STREAM, 3)), Skeleton())
    assert [s.misses(l) for l in ("L1", "L2", "L3")] == [3, 3, 3]


def test_single_record_cycles():
    # ceil((5 + 1) / 6) = 1 front-end cycle + 200 memory
    s = run([TraceRecord(1, 0, gap=5)], Skeleton())
    assert (s.instructions, s.cycles) == (6, 201)


def test_cycles_formula_by_hand():
    trace = [TraceRecord(1, 0, gap=0), TraceRecord(1, 0, gap=12), TraceRecord(1, 64, gap=6)]
    s = run(trace, Skeleton())
    # (1 + 200) + (3 + 4) + (2 + 200)
    assert s.cycles == 410
    assert s.instructions == 1 + 13 + 7


@pytest.mark.parametrize("level,expected", [
    (Level.L1, False), (Level.L2, True), (Level.L3, True), (Level.MEM, True)])
def test_l1_filter(level, expected):
    assert l1_filter(AccessOutcome(level, 0, False, False)) is expected


def test_prefetcher_sees_only_l1_misses():
    pf = Scripted(lambda line: [])
    trace = [TraceRecord(9, 0), TraceRecord(9, 0), TraceRecord(9, 64)]
    run(trace, pf)
    assert pf.seen == [(9, 0, False), (9, 1, False)]


def test_issue_empty_candidates():
    h, w = Hierarchy(), OccupancyWindow(32)
    assert issue_prefetches([], h, w, EngineConfig()) == 0


def test_issue_single_candidate_to_l2():
    h, w, st = Hierarchy(), OccupancyWindow(32), SimStats()
    assert issue_prefetches([5], h, w, EngineConfig(), st) == 1
    assert 5 in h.l2 and st.fills_l2 == 1


def test_issue_occupancy_split():
    # threshold 12: window count goes 0..11 (L2) then 12.. (L3); cap is 16
    cfg = EngineConfig(occupancy_threshold=12)
    h, w, st = Hierarchy(), OccupancyWindow(32), SimStats()
    w.advance()
    assert issue_prefetches(range(100, 120), h, w, cfg, st) == 16
    assert [line in h.l2 for line in range(100, 116)] == [True] * 12 + [False] * 4
    assert all(line in h.l3 for line in range(100, 116))
    assert 116 not in h.l3
    assert (st.fills_l2, st.fills_l3) == (12, 4)


def test_issue_skips_resident_and_negative():
    h, w = Hierarchy(), OccupancyWindow(32)
    h.demand_access(3 << 6)
    assert issue_prefetches([-1, 3, 4], h, w, EngineConfig()) == 1


def test_occupancy_window_slides():
    w = OccupancyWindow(3)
    w.advance(); w.record(5)
    w.advance(); w.record(1)
    w.advance()
    assert w.count == 6
    w.advance()
    assert w.count == 1


def test_counter_consistency_and_accounting():
    trace = mixed_workload(1500, seed=2)
    for pf in (Skeleton(), NextLine(), UMBP()):
        s = run(trace, pf)
        for c in s.levels.values():
            assert c.accesses == c.hits + c.misses
        assert s.prefetches_useful <= s.prefetches_filled <= s.prefetches_issued
        assert s.cycles >= math.ceil(s.instructions / 6)


def test_skeleton_neutrality():
    trace = mixed_workload(1500, seed=5)
    a, b = run(trace, Skeleton()), run(trace, None)
    assert a.levels == b.levels and a.cycles == b.cycles


def test_useful_only_counts_first_touch():
    pf = Scripted(lambda line: [line + 1] if line == 0 else [])
    trace = [TraceRecord(1, 0), TraceRecord(1, 64), TraceRecord(1, 64)]
    s = run(trace, pf)
    assert s.prefetches_useful == 1


def test_timing_floor_perfect_prefetcher():
    trace = generate(PatternSpec(Pattern.STRIDE, 50, stride_lines=5))
    lines = [r.line for r in trace]
    nxt = {a: b for a, b in zip(lines, lines[1:])}
    perfect = Scripted(lambda line: [nxt[line]] if line in nxt else [])
    assert run(trace, perfect).cycles < run(trace, Skeleton()).cycles


def test_engine_config_validation():
    with pytest.raises(ValueError):
        run([], None, engine_config=EngineConfig(issue_width=0))


def test_digest_tracks_trace_and_config():
    t = generate(PatternSpec(Pattern.STREAM, 10))
    assert run(t).digest == run(t, NextLine()).digest
    assert run(t).digest != run(t[:-1]).digest
    assert run(t).digest != run(t, engine_config=EngineConfig(issue_width=4)).digest
