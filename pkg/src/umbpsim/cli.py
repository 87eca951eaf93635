"""Command-line entry point: ``umbpsim gen | run | compare | sweep``.

Exit codes: 0 success, 1 I/O failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Sequence

from . import __version__
from .baselines import BASELINES, baseline_storage_bits
from .config import ConfigError, SimConfig, load_config
from .engine import run
from .metrics import RunSummary, summarize, to_csv, with_coverage
from .trace import (DEFAULT_GAP, DEFAULT_IP, Pattern, PatternSpec,
                    TraceFormatError, TraceSpecError, generate, mixed_workload,
                    read_trace, write_trace)
from .umbp import UMBP, UmbpParams, storage_report

PREFETCHERS = (*BASELINES, "umbp")

EXIT_OK, EXIT_IO, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def make_prefetcher(name: str, params: UmbpParams | None = None):
    if name == "umbp":
        return UMBP(params)
    try:
        return BASELINES[name]()
    except KeyError:
        raise UsageError(
            f"unknown prefetcher {name!r}; choose from {', '.join(PREFETCHERS)}"
        ) from None


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _grid(text: str, conv) -> list:
    try:
        return sorted({conv(t) for t in _split(text)})
    except ValueError:
        raise UsageError(f"bad grid value list {text!r}") from None


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _say(args, *lines: str) -> None:
    # keep stdout clean for CSV when no output file is given
    stream = sys.stdout if args.out else sys.stderr
    for line in lines:
        print(line, file=stream)


def _storage_lines(name: str, params: UmbpParams) -> list[str]:
    if name == "umbp":
        return storage_report(params).lines()
    return [baseline_storage_bits(name).line()]


def _human(s: RunSummary) -> str:
    text = (f"{s.name}: ipc {s.ipc:.4f}, L2 miss rate {s.l2_miss_rate:.4f}, "
            f"issued {s.stats.prefetches_issued}, useful {s.stats.prefetches_useful}, "
            f"accuracy {s.accuracy:.4f}")
    if s.coverage is not None:
        text += f", coverage {s.coverage:.4f}"
    return text


def _load(args) -> tuple[SimConfig, list]:
    cfg = load_config(args.config, args.set or ())
    return cfg, read_trace(args.trace)


def _simulate(trace, name: str, cfg: SimConfig) -> RunSummary:
    pf = make_prefetcher(name, replace(cfg.umbp))
    return summarize(run(trace, pf, cfg.hierarchy, cfg.engine), name)


def cmd_gen(args) -> int:
    if args.pattern == "mix":
        trace = mixed_workload(args.count, args.seed)
    else:
        spec = PatternSpec(Pattern(args.pattern), args.count,
                           start_addr=args.start, stride_lines=args.stride_lines,
                           run_len=args.run_len, jump_lines=args.jump_lines,
                           region_lines=args.region_lines, gap=args.gap,
                           ip=args.ip, seed=args.seed)
        trace = generate(spec)
    write_trace(trace, args.output)
    print(f"wrote {len(trace)} records to {args.output}")
    return EXIT_OK


def cmd_run(args) -> int:
    make_prefetcher(args.prefetcher)
    cfg, trace = _load(args)
    s = _simulate(trace, args.prefetcher, cfg)
    _emit(to_csv([s]), args.out)
    _say(args, _human(s), *_storage_lines(args.prefetcher, cfg.umbp))
    return EXIT_OK


def compare(trace, names: Sequence[str], cfg: SimConfig) -> list[RunSummary]:
    """Run each prefetcher on ``trace``; coverage is against skeleton."""
    results = {n: _simulate(trace, n, cfg) for n in dict.fromkeys(names)}
    base = results.get("skeleton") or _simulate(trace, "skeleton", cfg)
    return [with_coverage(results[n], base) for n in names]


def cmd_compare(args) -> int:
    names = _split(args.prefetchers)
    if not names:
        raise UsageError("need at least one prefetcher")
    for n in names:
        make_prefetcher(n)
    cfg, trace = _load(args)
    rows = compare(trace, names, cfg)
    _emit(to_csv(rows), args.out)
    _say(args, *(_human(s) for s in rows))
    return EXIT_OK


SWEEP_COLUMNS = ("d_low", "d_std", "d_high", "threshold")


def sweep_points(d_low, d_std, d_high, thresholds) -> list[tuple]:
    """Lexicographic grid order, keeping only d_low <= d_std <= d_high."""
    return [p for p in itertools.product(sorted(d_low), sorted(d_std),
                                         sorted(d_high), sorted(thresholds))
            if p[0] <= p[1] <= p[2]]


def _sweep_point(job) -> RunSummary:
    trace, cfg, (lo, std, hi, thr) = job
    cfg = replace(cfg, umbp=replace(cfg.umbp, d_low=lo, d_std=std, d_high=hi,
                                    threshold=thr))
    cfg.validate()
    return _simulate(trace, "umbp", cfg)


def sweep(trace, cfg: SimConfig, points: Sequence[tuple], jobs: int = 1) -> str:
    """CSV text with one row per grid point; rows follow ``points`` order
    whatever ``jobs`` is."""
    base = _simulate(trace, "skeleton", cfg)
    work = [(trace, cfg, p) for p in points]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, work))
    else:
        results = [_sweep_point(w) for w in work]
    rows = [with_coverage(r, base) for r in results]
    extras = [(str(lo), str(std), str(hi), f"{thr:.6f}")
              for lo, std, hi, thr in points]
    return to_csv(rows, SWEEP_COLUMNS, extras)


def cmd_sweep(args) -> int:
    grids = (_grid(args.d_low, int), _grid(args.d_std, int),
             _grid(args.d_high, int), _grid(args.threshold, float))
    if not all(grids):
        raise UsageError("every sweep grid needs at least one value")
    points = sweep_points(*grids)
    if not points:
        raise UsageError("no grid combination satisfies d_low <= d_std <= d_high")
    cfg, trace = _load(args)
    for p in points:
        try:
            replace(cfg.umbp, d_low=p[0], d_std=p[1], d_high=p[2],
                    threshold=p[3]).validate()
        except ValueError as e:
            raise UsageError(f"grid point {p}: {e}") from None
    _emit(sweep(trace, cfg, points, args.jobs), args.out)
    _say(args, f"swept {len(points)} combinations")
    return EXIT_OK


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("trace", help="PFTR1 or text trace file")
    p.add_argument("-c", "--config", help="key = value config file")
    p.add_argument("-s", "--set", action="append", metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("-o", "--out", help="CSV output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    d = UmbpParams()
    parser = argparse.ArgumentParser(
        prog="umbpsim",
        description="Trace-driven cache simulator with pluggable prefetchers.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic trace")
    g.add_argument("pattern", choices=[p.value for p in Pattern] + ["mix"])
    g.add_argument("-n", "--count", type=int, default=1000)
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--start", type=lambda s: int(s, 0), default=0)
    g.add_argument("--stride-lines", type=int, default=1)
    g.add_argument("--run-len", type=int, default=8)
    g.add_argument("--jump-lines", type=int, default=32)
    g.add_argument("--region-lines", type=int, default=4096)
    g.add_argument("--gap", type=int, default=DEFAULT_GAP)
    g.add_argument("--ip", type=lambda s: int(s, 0), default=DEFAULT_IP)
    g.add_argument("--seed", type=lambda s: int(s, 0), default=1)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="simulate one prefetcher")
    _add_sim_args(r)
    r.add_argument("-p", "--prefetcher", default="umbp",
                   help=f"one of {', '.join(PREFETCHERS)}")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="simulate several prefetchers")
    _add_sim_args(c)
    c.add_argument("-p", "--prefetchers", default=",".join(PREFETCHERS),
                   help="comma-separated list (default: all)")
    c.set_defaults(func=cmd_compare)

    w = sub.add_parser("sweep", help="grid over UMBP degrees and threshold")
    _add_sim_args(w)
    w.add_argument("--d-low", default=str(d.d_low), help="comma list")
    w.add_argument("--d-std", default=str(d.d_std), help="comma list")
    w.add_argument("--d-high", default=str(d.d_high), help="comma list")
    w.add_argument("--threshold", default=str(d.threshold), help="comma list")
    w.add_argument("-j", "--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (UsageError, ConfigError, TraceSpecError) as e:
        print(f"umbpsim: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, TraceFormatError) as e:
        print(f"umbpsim: error: {e}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())
