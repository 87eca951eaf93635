"""Memory access traces: record type, synthetic generators and file I/O.

Binary layout (little-endian, fixed width)::

    b"PFTR1"                      5-byte magic
    repeat:
        u64 ip | u64 addr | u8 kind (0 load, 1 store) | u32 gap

A text form is also accepted by :func:`read_trace` when the magic is absent:
one record per line, ``ip,addr,kind,gap`` with ``ip``/``addr`` in hex
(``0x`` prefix optional), ``kind`` one of ``L``/``S``/``load``/``store``/``0``/``1``
and ``gap`` in decimal.  Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import enum
import os
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence, Union

from .rng import SplitMix64

LINE_BYTES = 64
LINE_SHIFT = 6
MAGIC = b"PFTR1"
DEFAULT_GAP = 5
DEFAULT_IP = 0x401000

_RECORD = struct.Struct("<QQBI")
RECORD_BYTES = _RECORD.size  # 21

PathOrFile = Union[str, os.PathLike, BinaryIO]


class Kind(enum.IntEnum):
    LOAD = 0
    STORE = 1


class TraceSpecError(ValueError):
    """A PatternSpec violates its invariants."""


class TraceFormatError(ValueError):
    """Input is neither a PFTR1 file nor parseable text."""


class TraceTruncatedError(TraceFormatError):
    def __init__(self, index: int, got: int):
        super().__init__(
            f"truncated record {index}: {got} of {RECORD_BYTES} bytes present")
        self.index = index


@dataclass(frozen=True, slots=True)
class TraceRecord:
    ip: int
    addr: int
    kind: Kind = Kind.LOAD
    gap: int = DEFAULT_GAP

    @property
    def line(self) -> int:
        return self.addr >> LINE_SHIFT


Trace = list  # list[TraceRecord], program order


class Pattern(str, enum.Enum):
    STREAM = "stream"
    STRIDE = "stride"
    STREAM_STRIDE = "stream_stride"
    RANDOM = "random"


@dataclass(frozen=True)
class PatternSpec:
    pattern: Pattern
    count: int
    start_addr: int = 0
    stride_lines: int = 1
    run_len: int = 8
    jump_lines: int = 32
    region_lines: int = 4096
    gap: int = DEFAULT_GAP
    ip: int = DEFAULT_IP
    seed: int = 1

    def validate(self) -> None:
        try:
            pattern = Pattern(self.pattern)
        except ValueError:
            raise TraceSpecError(f"unknown pattern {self.pattern!r}") from None
        if self.count < 0:
            raise TraceSpecError("count must be >= 0")
        if self.gap < 0 or self.gap > 0xFFFFFFFF:
            raise TraceSpecError("gap must fit in an unsigned 32-bit field")
        if self.start_addr < 0:
            raise TraceSpecError("start_addr must be non-negative")
        if pattern is Pattern.STRIDE and self.stride_lines == 0:
            raise TraceSpecError("stride_lines must be non-zero")
        if pattern is Pattern.STREAM_STRIDE and self.run_len < 1:
            raise TraceSpecError("run_len must be >= 1")
        if pattern is Pattern.RANDOM and self.region_lines < 1:
            raise TraceSpecError("region_lines must be >= 1")


def _line_sequence(spec: PatternSpec) -> Iterable[int]:
    base = spec.start_addr >> LINE_SHIFT
    pattern = Pattern(spec.pattern)
    if pattern is Pattern.STREAM:
        return (base + i for i in range(spec.count))
    if pattern is Pattern.STRIDE:
        return (base + i * spec.stride_lines for i in range(spec.count))
    if pattern is Pattern.STREAM_STRIDE:
        return (base + (i // spec.run_len) * spec.jump_lines + i % spec.run_len
                for i in range(spec.count))
    rng = SplitMix64(spec.seed)
    return [base + rng.below(spec.region_lines) for _ in range(spec.count)]


def generate(spec: PatternSpec) -> Trace:
    """Expand a pattern spec into a list of load records.

    Stream and stride addresses keep ``start_addr``'s offset within the line;
    random addresses are line-aligned.
    """
    spec.validate()
    offset = spec.start_addr & (LINE_BYTES - 1)
    if Pattern(spec.pattern) is Pattern.RANDOM:
        offset = 0
    out = []
    for line in _line_sequence(spec):
        if line < 0:
            raise TraceSpecError("pattern walks below address 0")
        out.append(TraceRecord(spec.ip, (line << LINE_SHIFT) | offset,
                               Kind.LOAD, spec.gap))
    return out


def interleave(traces: Sequence[Trace], seed: int = 1) -> Trace:
    """Merge traces round-robin, each turn taking a burst of 1-3 records.

    Burst lengths and the starting trace come from a seeded SplitMix64, so
    the merge is reproducible; every input keeps its internal order.
    """
    cursors = [0] * len(traces)
    active = [i for i, t in enumerate(traces) if len(t)]
    if len(active) <= 1:
        return list(traces[active[0]]) if active else []
    rng = SplitMix64(seed)
    out: Trace = []
    turn = rng.below(len(active))
    while active:
        turn %= len(active)
        idx = active[turn]
        src = traces[idx]
        burst = 1 + rng.below(3)
        take = min(burst, len(src) - cursors[idx])
        out.extend(src[cursors[idx]:cursors[idx] + take])
        cursors[idx] += take
        if cursors[idx] == len(src):
            active.pop(turn)
        else:
            turn += 1
    return out


def encode_trace(trace: Iterable[TraceRecord]) -> bytes:
    parts = [MAGIC]
    pack = _RECORD.pack
    for r in trace:
        parts.append(pack(r.ip, r.addr, int(r.kind), r.gap))
    return b"".join(parts)


def write_trace(trace: Iterable[TraceRecord], destination: PathOrFile) -> int:
    """Write ``trace`` in PFTR1 format; returns the number of bytes written."""
    data = encode_trace(trace)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "wb") as f:
            f.write(data)
    return len(data)


def _parse_kind(tok: str) -> Kind:
    tok = tok.strip().lower()
    if tok in ("l", "load", "0", "r"):
        return Kind.LOAD
    if tok in ("s", "store", "1", "w"):
        return Kind.STORE
    raise ValueError(f"bad kind {tok!r}")


def _parse_text_line(line: str) -> TraceRecord:
    fields = [f.strip() for f in line.split(",")]
    if len(fields) != 4:
        raise ValueError("expected 4 comma-separated fields")
    ip, addr = int(fields[0], 16), int(fields[1], 16)
    gap = int(fields[3], 10)
    if not (0 <= ip <= 0xFFFFFFFFFFFFFFFF and 0 <= addr <= 0xFFFFFFFFFFFFFFFF
            and 0 <= gap <= 0xFFFFFFFF):
        raise ValueError("field out of range")
    return TraceRecord(ip, addr, _parse_kind(fields[2]), gap)


def _decode_text(data: bytes) -> Trace:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError:
        raise TraceFormatError("bad magic and not a text trace") from None
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(_parse_text_line(line))
        except ValueError as e:
            if not out:
                raise TraceFormatError(
                    "bad magic and not a text trace") from None
            raise TraceFormatError(f"text trace line {lineno}: {e}") from None
    if not out:
        raise TraceFormatError("bad magic and not a text trace")
    return out


def decode_trace(data: bytes) -> Trace:
    if not data.startswith(MAGIC):
        return _decode_text(data)
    body = memoryview(data)[len(MAGIC):]
    n, rem = divmod(len(body), RECORD_BYTES)
    if rem:
        raise TraceTruncatedError(n, rem)
    out = []
    for i, (ip, addr, kind, gap) in enumerate(_RECORD.iter_unpack(body)):
        if kind > 1:
            raise TraceFormatError(f"record {i}: bad kind byte {kind}")
        out.append(TraceRecord(ip, addr, Kind(kind), gap))
    return out


def read_trace(source: PathOrFile) -> Trace:
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as f:
            data = f.read()
    return decode_trace(bytes(data))


def mixed_workload(count: int, seed: int = 1, base_ip: int = DEFAULT_IP,
                   minor_ips: int = 96) -> Trace:
    """Several instructions with different patterns, interleaved.

    Six major instructions (two streams, two strides, a stream+stride walk
    and a random chaser) each own a 64 MB region and a seventh of ``count``.
    The last seventh is spread over ``minor_ips`` rarely-executed
    instructions doing short streams, so the instruction table holds more
    than the 50 "common" entries.
    """
    if count < 0:
        raise TraceSpecError("count must be >= 0")
    region = 1 << 26
    parts = [
        dict(pattern=Pattern.STREAM),
        dict(pattern=Pattern.STREAM),
        dict(pattern=Pattern.STRIDE, stride_lines=7),
        dict(pattern=Pattern.STRIDE, stride_lines=-3),
        dict(pattern=Pattern.STREAM_STRIDE, run_len=8, jump_lines=32),
        dict(pattern=Pattern.RANDOM, region_lines=1 << 14),
    ]
    share, extra = divmod(count, len(parts) + 1)
    traces = []
    for i, kw in enumerate(parts):
        n = share + (i < extra)
        start = (i + 1) * region
        if kw.get("stride_lines", 1) < 0:
            start += region - 64
        traces.append(generate(PatternSpec(count=n, start_addr=start,
                                           ip=base_ip + 0x10 * i,
                                           seed=seed + i, **kw)))
    minor_total = count - sum(len(t) for t in traces)
    if minor_total and minor_ips > 0:
        n_minor = min(minor_ips, minor_total)
        each, rem = divmod(minor_total, n_minor)
        rng = SplitMix64(seed ^ 0xA5A5)
        minor = []
        for k in range(n_minor):
            start = (len(parts) + 1) * region + rng.below(1 << 20) * LINE_BYTES
            minor.append(generate(PatternSpec(Pattern.STREAM, each + (k < rem),
                                              start_addr=start,
                                              ip=base_ip + 0x10000 + 0x10 * k)))
        traces.append(interleave(minor, seed + 1))
    return interleave(traces, seed)
