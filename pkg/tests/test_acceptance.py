"""Acceptance gate: one test per criterion, each reported as a PASS/FAIL
line in the terminal summary (see conftest.py)."""

import time

from naive_cache import NaiveHierarchy
from umbpsim.baselines import IpStridePrefetcher, NextLine, Skeleton
from umbpsim.cache import Hierarchy
from umbpsim.cli import main, sweep, sweep_points
from umbpsim.config import SimConfig
from umbpsim.engine import run
from umbpsim.metrics import coverage, summarize
from umbpsim.rng import SplitMix64
from umbpsim.trace import (Pattern, PatternSpec, generate, mixed_workload,
                           write_trace)
from umbpsim.umbp import (UMBP, InstructionTable, MissClass, UmbpParams, Usage,
                          classify_miss, classify_usage, select_degree,
                          storage_report)

P = UmbpParams()


def compare_runs(trace, **prefetchers):
    base = summarize(run(trace, Skeleton()), "skeleton")
    out = {}
    for name, pf in prefetchers.items():
        s = summarize(run(trace, pf), name)
        out[name] = (s, coverage(s, base))
    return base, out


def test_c1_degree_matrix(criterion):
    criterion(1, "degree matrix")
    assert select_degree(Usage.COMMON, MissClass.HIGH, P) == 8
    assert select_degree(Usage.COMMON, MissClass.LOW, P) == 4
    assert select_degree(Usage.UNCOMMON, MissClass.HIGH, P) == 4
    assert select_degree(Usage.UNCOMMON, MissClass.LOW, P) == 1


def test_c2_storage_accounting(criterion):
    criterion(2, "storage accounting")
    r = storage_report()
    assert r.main_bits == 25984 == 128 * 203
    assert r.sample_bits == 4480 == 70 * 64
    assert r.total_bits == 30464
    assert not r.matches_claim
    assert any("32768" in line for line in r.lines())
    assert UMBP().storage_bits() == 30464


def test_c3_oracle_equivalence(criterion):
    criterion(3, "cache oracle equivalence")
    # 4096-line region: misses in L1/L2, mostly hits in L3
    trace = generate(PatternSpec(Pattern.RANDOM, 1000, region_lines=4096, seed=3))
    t0 = time.perf_counter()
    h, ref = Hierarchy(), NaiveHierarchy()
    for rec in trace:
        assert int(h.demand_access(rec.addr).hit_level) == ref.access(rec.addr)[0]
    got = [tuple(vars(c).values()) for c in h.snapshot_counters().values()]
    assert got == ref.counters()
    assert time.perf_counter() - t0 < 1.0
    # the trace exercises hits and misses at more than one level
    assert sum(c.hits for c in h.snapshot_counters().values()) > 0


def test_c4_stream(criterion):
    criterion(4, "stream workload")
    trace = generate(PatternSpec(Pattern.STREAM, 10_000))
    t0 = time.perf_counter()
    base, res = compare_runs(trace, umbp=UMBP())
    elapsed = time.perf_counter() - t0
    s, cov = res["umbp"]
    assert cov >= 0.90, (s.stats.misses("L2"), base.stats.misses("L2"))
    assert s.accuracy >= 0.9
    assert elapsed < 1.0


def test_c5_stride(criterion):
    criterion(5, "stride-7 workload")
    trace = generate(PatternSpec(Pattern.STRIDE, 10_000, stride_lines=7))
    _, res = compare_runs(trace, umbp=UMBP(), ip_stride=IpStridePrefetcher(),
                          next_line=NextLine())
    assert res["umbp"][1] >= 0.75
    assert res["ip_stride"][1] >= 0.75
    assert res["next_line"][0].accuracy <= 0.01


def test_c6_stream_stride(criterion):
    criterion(6, "stream+stride workload")
    trace = generate(PatternSpec(Pattern.STREAM_STRIDE, 10_000, run_len=8,
                                 jump_lines=32))
    _, res = compare_runs(trace, umbp=UMBP(), next_line=NextLine())
    assert res["umbp"][1] >= 0.5
    assert res["umbp"][1] >= res["next_line"][1]


def test_c7_lru_table(criterion):
    criterion(7, "instruction table LRU")
    t = InstructionTable()
    for ip in range(129):
        t.lookup_or_allocate(0x1000 + ip, False)
    assert len(t) == 128 and 0x1000 not in t
    assert all(0x1000 + ip in t for ip in range(1, 129))

    for seed in range(20):
        rng = SplitMix64(seed)
        t = InstructionTable()
        span = 64 + rng.below(512)
        for _ in range(2000):
            t.lookup_or_allocate(rng.below(span), rng.below(2) == 1)
            assert len(t) <= 128


def test_c8_determinism(criterion, tmp_path):
    criterion(8, "byte-identical compare/sweep CSV")
    trace = tmp_path / "mix.trace"
    write_trace(mixed_workload(1500, seed=4), trace)
    outs = []
    for i in range(2):
        c, s = tmp_path / f"c{i}.csv", tmp_path / f"s{i}.csv"
        assert main(["compare", str(trace), "-o", str(c)]) == 0
        assert main(["sweep", str(trace), "--d-std", "2,4", "--d-high", "4,8",
                     "--threshold", "0.25,0.5", "-o", str(s)]) == 0
        outs.append((c.read_bytes(), s.read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][0].count(b"\n") == 7


def _random_table(rng):
    t = InstructionTable()
    for ip in range(128):
        e = t.lookup_or_allocate(ip, False)
        e.ref_count = 1 + rng.below(1000)
        e.miss_count = rng.below(e.ref_count + 1)
    return t


def test_c9_classifier_properties(criterion):
    criterion(9, "classifier properties")
    violations = []
    seen = set()
    for case in range(1000):
        rng = SplitMix64(case)
        t = _random_table(rng)
        ip = rng.below(128)
        me = t.get(ip)
        seed = rng.next_u64()

        # monotonicity: raising the miss count never turns HIGH into LOW
        prev = MissClass.LOW
        for misses in sorted({0, me.miss_count, me.ref_count // 2, me.ref_count}):
            me.miss_count = misses
            got = classify_miss(t, ip, P, SplitMix64(seed))
            seen.add(got)
            if prev is MissClass.HIGH and got is MissClass.LOW:
                violations.append(("monotone", case, misses))
            prev = got

        # equal miss rates everywhere: nobody is strictly lower, so HIGH
        num, den = rng.below(5), 5
        for _, e in t.entries():
            k = 1 + rng.below(50)
            e.ref_count, e.miss_count = den * k, num * k
        if classify_miss(t, ip, P, SplitMix64(seed)) is not MissClass.HIGH:
            violations.append(("equal", case))

        # usage is unchanged when every ref_count is scaled by the same factor
        probes = [rng.below(128) for _ in range(4)]
        before = [classify_usage(t, p) for p in probes]
        factor = 2 + rng.below(7)
        for _, e in t.entries():
            e.ref_count *= factor
        if [classify_usage(t, p) for p in probes] != before:
            violations.append(("scale", case))
    assert violations == []
    assert seen == {MissClass.LOW, MissClass.HIGH}


def test_c10_sweep_harness(criterion):
    criterion(10, "sweep harness")
    trace = mixed_workload(3000, seed=1)
    grid = ([1, 2, 3], [4, 5, 6], [8, 10, 12], [0.25, 0.375, 0.5])
    points = sweep_points(*grid)
    assert len(points) == 81
    t0 = time.perf_counter()
    text = sweep(trace, SimConfig(), points)
    elapsed = time.perf_counter() - t0
    lines = text.splitlines()
    assert len(lines) == 1 + len(points)
    header = lines[0].split(",")
    issued = {}
    for line in lines[1:]:
        row = dict(zip(header, line.split(",")))
        key = (row["d_low"], row["d_high"], row["threshold"])
        issued.setdefault(key, []).append((int(row["d_std"]), int(row["issued"])))
    for key, series in issued.items():
        counts = [n for _, n in sorted(series)]
        assert counts == sorted(counts), (key, series)
    assert elapsed < 30.0
