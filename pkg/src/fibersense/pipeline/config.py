"""Service configuration: nested dataclasses with strict JSON loading.

Unknown keys are rejected rather than ignored so a typo in a config
file fails at startup instead of silently running with defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from fibersense.detect.detector import DetectorConfig
from fibersense.errors import ConfigError


def _from_mapping(cls, obj: dict, context: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{context}: expected an object, got {type(obj).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    return cls(**obj)


@dataclass(frozen=True)
class LayoutConfig:
    n_bins: int = 1000
    bin_size_m: float = 1.0
    pulse_rate_hz: float = 1000.0


@dataclass(frozen=True)
class DownsampleConfig:
    time_factor: int = 10
    space_factor: int = 2


@dataclass
class PipelineConfig:
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    downsample: DownsampleConfig = field(default_factory=DownsampleConfig)
    block_size_traces: int = 100
    feature_window_s: float = 1.0
    classify_interval_s: float = 0.5
    confidence_threshold: float = 0.5
    include_velocity: bool = True
    model_path: str | None = None
    event_log_path: str | None = None
    record_path: str | None = None
    replay_path: str | None = None
    replay_speed: float = 1.0
    host: str = "127.0.0.1"
    port: int = 8765
    seed: int = 12345

    def validate(self) -> None:
        ds = self.downsample
        if ds.time_factor < 1 or ds.space_factor < 1:
            raise ConfigError("downsample factors must be >= 1")
        if self.block_size_traces < 1:
            raise ConfigError("block_size_traces must be >= 1")
        if self.block_size_traces % ds.time_factor != 0:
            raise ConfigError(
                f"block_size_traces ({self.block_size_traces}) must be a multiple "
                f"of downsample.time_factor ({ds.time_factor})"
            )
        if self.layout.n_bins % ds.space_factor != 0:
            raise ConfigError(
                f"layout.n_bins ({self.layout.n_bins}) must be a multiple "
                f"of downsample.space_factor ({ds.space_factor})"
            )
        if self.feature_window_s <= 0 or self.classify_interval_s <= 0:
            raise ConfigError("feature window and classify interval must be positive")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ConfigError("confidence_threshold must lie in [0, 1]")
        if self.replay_speed < 0:
            raise ConfigError("replay_speed must be >= 0 (0 = unpaced)")

    def to_dict(self) -> dict:
        """Every effective value, defaults included."""
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config root must be an object")
        obj = dict(obj)
        nested = {
            "layout": LayoutConfig,
            "detector": DetectorConfig,
            "downsample": DownsampleConfig,
        }
        kwargs = {}
        for key, sub_cls in nested.items():
            if key in obj:
                kwargs[key] = _from_mapping(sub_cls, obj.pop(key), key)
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            config = cls(**kwargs, **obj)
        except TypeError as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        config.validate()
        return config


def load_config(path) -> PipelineConfig:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return PipelineConfig.from_dict(obj)
