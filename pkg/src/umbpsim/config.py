"""Flat ``key = value`` configuration files.

Example::

    # cache hierarchy
    l3_size = 4M
    memory_latency = 250
    # UMBP
    threshold = 0.3
    d_high = 12

Sizes accept ``K``/``KB``/``M``/``MB`` suffixes.  Later sources override
earlier ones: built-in defaults, then the file, then ``--set`` flags.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .cache import HierarchyConfig, LevelConfig
from .engine import EngineConfig
from .umbp import UmbpParams


class ConfigError(ValueError):
    pass


def parse_size(text: str) -> int:
    t = text.strip().upper().removesuffix("B")
    scale = 1
    if t.endswith("K"):
        scale, t = 1024, t[:-1]
    elif t.endswith("M"):
        scale, t = 1024 * 1024, t[:-1]
    return int(t, 0) * scale


def _int(text: str) -> int:
    return int(text.strip(), 0)


_LEVEL_KEYS = {"size": ("size_bytes", parse_size),
               "ways": ("associativity", _int),
               "latency": ("latency_cycles", _int)}
_ENGINE_KEYS = {"issue_width": "issue_width",
                "occupancy_window": "occupancy_window",
                "occupancy_threshold": "occupancy_threshold",
                "max_candidates": "max_candidates_per_access"}
_UMBP_KEYS = {"table_entries": _int, "common_count": _int,
              "sample_uncommon": _int, "threshold": float, "d_low": _int,
              "d_std": _int, "d_high": _int, "seed": _int}

KEYS = sorted([f"l{n}_{k}" for n in (1, 2, 3) for k in _LEVEL_KEYS]
              + ["memory_latency", *_ENGINE_KEYS, *_UMBP_KEYS])


@dataclass
class SimConfig:
    hierarchy: HierarchyConfig = field(default_factory=HierarchyConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    umbp: UmbpParams = field(default_factory=UmbpParams)

    def validate(self) -> None:
        try:
            self.hierarchy.validate()
            self.engine.validate()
            self.umbp.validate()
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def apply(self, settings: Mapping[str, str]) -> "SimConfig":
        hier, eng, umbp = self.hierarchy, self.engine, replace(self.umbp)
        for key, raw in settings.items():
            try:
                if key[:1] == "l" and key[1:2] in "123" and key[2:3] == "_":
                    attr, conv = _LEVEL_KEYS[key[3:]]
                    name = key[:2]
                    level: LevelConfig = getattr(hier, name)
                    hier = replace(hier, **{name: replace(level, **{attr: conv(raw)})})
                elif key == "memory_latency":
                    hier = replace(hier, memory_latency_cycles=_int(raw))
                elif key in _ENGINE_KEYS:
                    eng = replace(eng, **{_ENGINE_KEYS[key]: _int(raw)})
                elif key in _UMBP_KEYS:
                    setattr(umbp, key, _UMBP_KEYS[key](raw))
                else:
                    raise KeyError(key)
            except KeyError:
                raise ConfigError(f"unknown config key {key!r}") from None
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        return SimConfig(hier, eng, umbp)


def parse_lines(lines: Iterable[str], origin: str = "<config>") -> dict[str, str]:
    out = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{origin}:{n}: expected key = value")
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | None = None,
                overrides: Iterable[str] = ()) -> SimConfig:
    """Defaults, then ``path`` (if given), then ``key=value`` overrides.

    ``OSError`` from reading ``path`` propagates to the caller.
    """
    settings: dict[str, str] = {}
    if path:
        with open(path) as f:
            settings.update(parse_lines(f, path))
    settings.update(parse_lines(overrides, "--set"))
    cfg = SimConfig().apply(settings)
    cfg.validate()
    return cfg


def dump_config(cfg: SimConfig) -> str:
    h, e, u = cfg.hierarchy, cfg.engine, cfg.umbp
    rows = []
    for n, lv in ((1, h.l1), (2, h.l2), (3, h.l3)):
        rows += [f"l{n}_size = {lv.size_bytes}", f"l{n}_ways = {lv.associativity}",
                 f"l{n}_latency = {lv.latency_cycles}"]
    rows.append(f"memory_latency = {h.memory_latency_cycles}")
    rows += [f"{k} = {getattr(e, attr)}" for k, attr in _ENGINE_KEYS.items()]
    rows += [f"{k} = {getattr(u, k)}" for k in _UMBP_KEYS]
    return "\n".join(rows) + "\n"
