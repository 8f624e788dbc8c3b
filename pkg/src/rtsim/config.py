"""Configuration schema, defaults, and validation.

Config files are YAML with nested sections mirroring the module names;
unknown keys are rejected and every constraint failure names the offending
field. CLI flags override file values via dotted paths. Sizes accept plain
byte counts or strings with binary suffixes ("1MB" == 2**20).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

import yaml

from .fabric import STATION_POLICIES, FabricConfig
from .optim import OptimConfig
from .translation import TlbConfig, WalkConfig

MiB = 1024 * 1024


class ConfigError(ValueError):
    pass


_SIZE_SUFFIXES = {"KB": 1024, "MB": MiB, "GB": 1024 * MiB,
                  "KIB": 1024, "MIB": MiB, "GIB": 1024 * MiB, "B": 1}


def parse_size(value) -> int:
    """Accept ints or strings like '1MB', '256MB', '4GB' (binary multiples)."""
    if isinstance(value, bool):
        raise ConfigError(f"size must be an integer or size string, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        text = value.strip().upper().replace(" ", "")
        for suffix in ("KIB", "MIB", "GIB", "KB", "MB", "GB", "B"):
            if text.endswith(suffix):
                number = text[: -len(suffix)]
                try:
                    return int(number) * _SIZE_SUFFIXES[suffix]
                except ValueError:
                    break
        try:
            return int(text)
        except ValueError:
            pass
    raise ConfigError(f"cannot parse size value {value!r}")


@dataclass
class CollectiveConfig:
    window_bytes_per_wg: int = 65536
    chunk_page_aligned: bool = True


@dataclass
class EngineConfig:
    max_events: int = 5_000_000_000


@dataclass
class MetricsConfig:
    emit_trace: bool = True
    trace_sample_every: int = 1


@dataclass
class SimConfig:
    num_gpus: int = 16
    collective_size: int = MiB
    request_size: int = 256
    page_size: int = 2 * MiB
    seed: int = 0
    mode: str = "real"                    # real | ideal
    collective: CollectiveConfig = field(default_factory=CollectiveConfig)
    fabric: FabricConfig = field(default_factory=FabricConfig)
    tlb: TlbConfig = field(default_factory=TlbConfig)
    walk: WalkConfig = field(default_factory=WalkConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def validate(self) -> "SimConfig":
        c = self
        if c.num_gpus < 1:
            raise ConfigError(f"num_gpus: must be >= 1, got {c.num_gpus}")
        if c.mode not in ("real", "ideal"):
            raise ConfigError(f"mode: must be 'real' or 'ideal', got {c.mode!r}")
        if c.page_size <= 0 or c.page_size & (c.page_size - 1):
            raise ConfigError(f"page_size: must be a power of two, got {c.page_size}")
        if c.collective_size <= 0:
            raise ConfigError(f"collective_size: must be positive, got {c.collective_size}")
        if c.collective_size % c.num_gpus:
            raise ConfigError(
                f"collective_size: {c.collective_size} not divisible by num_gpus {c.num_gpus}")
        chunk = c.collective_size // c.num_gpus
        if c.request_size <= 0:
            raise ConfigError(f"request_size: must be positive, got {c.request_size}")
        if chunk % c.request_size:
            raise ConfigError(
                f"request_size: chunk {chunk} not divisible by request_size {c.request_size}")
        if c.page_size % c.request_size:
            raise ConfigError(
                f"request_size: must divide page_size {c.page_size}, got {c.request_size}")
        if c.collective.window_bytes_per_wg < c.request_size:
            raise ConfigError(
                "collective.window_bytes_per_wg: must be >= request_size "
                f"({c.collective.window_bytes_per_wg} < {c.request_size})")
        f = c.fabric
        for name in ("link_latency_ns", "switch_latency_ns",
                     "local_fabric_latency_ns", "hbm_latency_ns"):
            if getattr(f, name) < 0:
                raise ConfigError(f"fabric.{name}: must be >= 0")
        if f.stations_per_gpu < 1:
            raise ConfigError(f"fabric.stations_per_gpu: must be >= 1, got {f.stations_per_gpu}")
        if f.station_bandwidth_gbps % 8:
            raise ConfigError(
                f"fabric.station_bandwidth_gbps: must be a multiple of 8 for whole "
                f"bytes/ns, got {f.station_bandwidth_gbps}")
        if f.bytes_per_ns < 1:
            raise ConfigError("fabric.station_bandwidth_gbps: must be >= 8")
        if f.ack_bytes < 0:
            raise ConfigError(f"fabric.ack_bytes: must be >= 0, got {f.ack_bytes}")
        if f.header_overhead_bytes < 0:
            raise ConfigError("fabric.header_overhead_bytes: must be >= 0")
        if f.station_policy not in STATION_POLICIES:
            raise ConfigError(
                f"fabric.station_policy: must be one of {STATION_POLICIES}, "
                f"got {f.station_policy!r}")
        t = c.tlb
        for name in ("l1_entries", "l2_entries", "l1_mshr_entries", "l2_mshr_entries"):
            if getattr(t, name) < 1:
                raise ConfigError(f"tlb.{name}: must be >= 1")
        if t.l2_entries % t.l2_associativity:
            raise ConfigError(
                f"tlb.l2_associativity: {t.l2_associativity} must divide "
                f"l2_entries {t.l2_entries}")
        w = c.walk
        if w.levels < 1:
            raise ConfigError(f"walk.levels: must be >= 1, got {w.levels}")
        if len(w.pwc_entries) != w.levels - 1:
            raise ConfigError(
                f"walk.pwc_entries: need {w.levels - 1} sizes (one per non-leaf "
                f"level), got {len(w.pwc_entries)}")
        for n in w.pwc_entries:
            if n < 1 or n % w.pwc_associativity:
                raise ConfigError(
                    f"walk.pwc_entries: each size must be a positive multiple of "
                    f"associativity {w.pwc_associativity}, got {n}")
        if w.walkers < 1:
            raise ConfigError(f"walk.walkers: must be >= 1, got {w.walkers}")
        o = c.optim
        if not 0.0 < o.prefetch_trigger_fraction < 1.0:
            raise ConfigError(
                "optim.prefetch_trigger_fraction: must be in (0, 1), "
                f"got {o.prefetch_trigger_fraction}")
        if o.pretranslate_lead_ns < 0:
            raise ConfigError("optim.pretranslate_lead_ns: must be >= 0")
        if c.metrics.trace_sample_every < 1:
            raise ConfigError("metrics.trace_sample_every: must be >= 1")
        if c.engine.max_events < 1:
            raise ConfigError("engine.max_events: must be >= 1")
        return c

    def resolved_dict(self) -> dict:
        """Canonical config echo embedded in every output."""
        d = dataclasses.asdict(self)
        d["walk"]["pwc_entries"] = list(self.walk.pwc_entries)
        return d


_SIZE_KEYS = {"collective_size", "page_size"}

_SECTIONS = {
    "collective": CollectiveConfig,
    "fabric": FabricConfig,
    "tlb": TlbConfig,
    "walk": WalkConfig,
    "optim": OptimConfig,
    "engine": EngineConfig,
    "metrics": MetricsConfig,
}


def _coerce(name: str, current, value):
    if name in _SIZE_KEYS or name == "window_bytes_per_wg":
        return parse_size(value)
    if isinstance(current, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            low = value.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
        raise ConfigError(f"{name}: expected a boolean, got {value!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected an integer, got {value!r}") from None
    if isinstance(current, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    if isinstance(current, tuple):
        if isinstance(value, str):
            value = [v for v in value.replace(",", " ").split() if v]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name}: expected a list, got {value!r}")
        return tuple(int(v) for v in value)
    if isinstance(current, str):
        return str(value)
    raise ConfigError(f"{name}: unsupported value {value!r}")


def from_dict(data: dict, base: SimConfig | None = None) -> SimConfig:
    """Merge a nested dict over defaults; unknown keys are rejected."""
    cfg = base if base is not None else SimConfig()
    cfg = dataclasses.replace(
        cfg, **{name: dataclasses.replace(getattr(cfg, name)) for name in _SECTIONS})
    top_fields = {f.name for f in fields(SimConfig)}
    for key, value in (data or {}).items():
        if key not in top_fields:
            raise ConfigError(f"unknown config key: {key!r}")
        if key in _SECTIONS:
            section_cls = _SECTIONS[key]
            section = dataclasses.replace(getattr(cfg, key))
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected a mapping of settings")
            valid = {f.name for f in fields(section_cls)}
            for sub, subval in value.items():
                if sub not in valid:
                    raise ConfigError(f"unknown config key: '{key}.{sub}'")
                setattr(section, sub,
                        _coerce(f"{key}.{sub}", getattr(section, sub), subval))
            setattr(cfg, key, section)
        else:
            setattr(cfg, key, _coerce(key, getattr(cfg, key), value))
    return cfg


def apply_overrides(cfg: SimConfig, overrides: list[str]) -> SimConfig:
    """Apply CLI 'dotted.path=value' overrides on top of a config."""
    data: dict = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        path, value = item.split("=", 1)
        parts = path.strip().split(".")
        if len(parts) == 1:
            data[parts[0]] = value
        elif len(parts) == 2:
            data.setdefault(parts[0], {})[parts[1]] = value
        else:
            raise ConfigError(f"override path too deep: {path!r}")
    return from_dict(data, base=cfg)


def load_config(path: str, base: SimConfig | None = None) -> SimConfig:
    """Load YAML (an empty file yields pure defaults), merge, and validate."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return from_dict(data, base=base).validate()
