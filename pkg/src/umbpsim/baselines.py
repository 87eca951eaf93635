"""Comparison prefetchers: skeleton, next-line, stream, IP-stride, AMPM-lite.

All of them are deterministic and seed-free.  Pages and AMPM zones are
4 KB, i.e. 64 lines.  Storage figures are computed from the field widths
listed next to each table and are reported beside the published budgets
where those exist.
"""

from __future__ import annotations

from collections import OrderedDict, deque
from dataclasses import dataclass

PAGE_LINES = 64
PAGE_SHIFT = 6  # lines per page, log2

# field widths (bits) behind storage_bits(); tags assume 64-bit byte addresses
PAGE_TAG_BITS = 64 - 12
LINE_ADDR_BITS = 64 - 6
IP_BITS = 64


class Skeleton:
    def name(self) -> str:
        return "skeleton"

    def observe(self, ip: int, line: int, l2_hit: bool) -> list[int]:
        return []

    def storage_bits(self) -> int:
        return 0


class NextLine:
    def name(self) -> str:
        return "next_line"

    def observe(self, ip: int, line: int, l2_hit: bool) -> list[int]:
        return [line + 1]

    def storage_bits(self) -> int:
        return 0


@dataclass
class StreamPageEntry:
    page: int
    last_offset: int
    direction: int = 1  # +1 up, -1 down
    confidence: int = 0


class StreamPrefetcher:
    """Per-page direction tracker; two lines ahead once confidence >= 2."""

    ENTRY_BITS = PAGE_TAG_BITS + 6 + 1 + 2 + 6  # page, offset, dir, conf, lru
    CLAIMED_BYTES = 1560

    def __init__(self, pages: int = 64, degree: int = 2, confidence_max: int = 3):
        self.capacity = pages
        self.degree = degree
        self.confidence_max = confidence_max
        self.table: OrderedDict[int, StreamPageEntry] = OrderedDict()

    def name(self) -> str:
        return "stream"

    def storage_bits(self) -> int:
        return self.capacity * self.ENTRY_BITS

    def observe(self, ip: int, line: int, l2_hit: bool) -> list[int]:
        page, offset = line >> PAGE_SHIFT, line & (PAGE_LINES - 1)
        entry = self.table.get(page)
        if entry is None:
            if len(self.table) >= self.capacity:
                self.table.popitem(last=False)
            self.table[page] = StreamPageEntry(page, offset)
            return []
        self.table.move_to_end(page)
        if offset != entry.last_offset:
            moved = 1 if offset > entry.last_offset else -1
            if moved == entry.direction:
                entry.confidence = min(entry.confidence + 1, self.confidence_max)
            else:
                entry.confidence = 0
                entry.direction = moved
            entry.last_offset = offset
        if entry.confidence >= 2:
            d = entry.direction
            return [line + k * d for k in range(1, self.degree + 1)]
        return []


class IpStridePrefetcher:
    """Prefetches three strides ahead once an IP's last three lines are
    equally spaced."""

    ENTRY_BITS = IP_BITS + 3 * LINE_ADDR_BITS + 9  # ip, 3 lines, lru
    CLAIMED_BYTES = 32780

    def __init__(self, entries: int = 512, degree: int = 3):
        self.capacity = entries
        self.degree = degree
        self.table: OrderedDict[int, deque[int]] = OrderedDict()

    def name(self) -> str:
        return "ip_stride"

    def storage_bits(self) -> int:
        return self.capacity * self.ENTRY_BITS

    def observe(self, ip: int, line: int, l2_hit: bool) -> list[int]:
        hist = self.table.get(ip)
        if hist is None:
            if len(self.table) >= self.capacity:
                self.table.popitem(last=False)
            hist = self.table[ip] = deque(maxlen=3)
        else:
            self.table.move_to_end(ip)
        hist.append(line)
        if len(hist) < 3:
            return []
        a0, a1, a2 = hist
        stride = a2 - a1
        if stride == 0 or a1 - a0 != stride:
            return []
        return [line + k * stride for k in range(1, self.degree + 1)]


INIT, DEMAND, PREFETCHED = 0, 1, 2


class AmpmLite:
    """Access-map pattern matching over 4 KB zones.

    Each zone keeps a 2-bit state per line.  On an access at offset ``o`` the
    map is scanned for k = 1..16: if lines ``o-k`` and ``o-2k`` were demanded
    and ``o+k`` is untouched, ``o+k`` is predicted.  At most two predictions
    per access.
    """

    ENTRY_BITS = PAGE_TAG_BITS + 2 * PAGE_LINES + 6  # zone, state map, lru

    def __init__(self, zones: int = 64, max_stride: int = 16, degree: int = 2):
        self.capacity = zones
        self.max_stride = max_stride
        self.degree = degree
        self.zones: OrderedDict[int, bytearray] = OrderedDict()

    def name(self) -> str:
        return "ampm_lite"

    def storage_bits(self) -> int:
        return self.capacity * self.ENTRY_BITS

    def observe(self, ip: int, line: int, l2_hit: bool) -> list[int]:
        zone, offset = line >> PAGE_SHIFT, line & (PAGE_LINES - 1)
        cells = self.zones.get(zone)
        if cells is None:
            if len(self.zones) >= self.capacity:
                self.zones.popitem(last=False)
            cells = self.zones[zone] = bytearray(PAGE_LINES)
        else:
            self.zones.move_to_end(zone)
        cells[offset] = DEMAND
        base = zone << PAGE_SHIFT
        out = []
        for k in range(1, self.max_stride + 1):
            target = offset + k
            if offset - 2 * k < 0 or target >= PAGE_LINES:
                continue
            if (cells[offset - k] == DEMAND and cells[offset - 2 * k] == DEMAND
                    and cells[target] == INIT):
                cells[target] = PREFETCHED
                out.append(base + target)
                if len(out) >= self.degree:
                    break
        return out


@dataclass(frozen=True)
class BaselineStorage:
    name: str
    computed_bits: int
    claimed_bytes: int | None

    def line(self) -> str:
        text = f"{self.name}: {self.computed_bits} bits ({self.computed_bits / 8:g} bytes)"
        if self.claimed_bytes is not None:
            text += f"; published figure {self.claimed_bytes} bytes"
        return text


BASELINES = {
    "skeleton": Skeleton,
    "next_line": NextLine,
    "stream": StreamPrefetcher,
    "ip_stride": IpStridePrefetcher,
    "ampm_lite": AmpmLite,
}

_CLAIMS = {"skeleton": 0, "next_line": 0,
           "stream": StreamPrefetcher.CLAIMED_BYTES,
           "ip_stride": IpStridePrefetcher.CLAIMED_BYTES}


def baseline_storage_bits(which: str) -> BaselineStorage:
    try:
        pf = BASELINES[which]()
    except KeyError:
        raise ValueError(f"unknown baseline {which!r}") from None
    return BaselineStorage(which, pf.storage_bits(), _CLAIMS.get(which))
