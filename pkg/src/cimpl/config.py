"""Run configuration, read from a TOML file.

Every section is optional; unknown sections or keys are rejected.

.. code-block:: toml

    [geometry]
    d_left = 0.012
    d_right = 0.012
    d_binaural = 0.16
    c = 343.0

    [stft]
    frame_len = 128
    hop = 64
    window = "hann"

    [smoothing]
    time_constant_s = 0.04
    r_floor = 1e-4
    eps_mag = 1e-12

    [fit]
    fraction = 0.9
    cap_hz = 8000.0

    [fusion]
    alpha = 0.1
    tie_break = "binaural"

    [tracker]
    process_std_deg = 1.0
    delta_min = 1e-4
    delta_max = 25.0
    init_angle_std_deg = 30.0
    init_velocity_std_deg = 5.0

    [io]
    channel_map = [0, 1, 2, 3]   # left-front, left-rear, right-front, right-rear
    activity_threshold_db = -70.0
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .fusion import CHI2_1_UPPER, TIE_BREAKS
from .geometry import ArrayGeometry
from .stft import StftConfig
from .tdoa import FitPolicy
from .tracker import TrackerConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SmoothingConfig:
    time_constant_s: float = 0.04
    r_floor: float = 1e-4
    eps_mag: float = 1e-12

    def __post_init__(self):
        if not self.time_constant_s > 0:
            raise ValueError("time constant must be positive")
        if not 0 < self.r_floor < 1:
            raise ValueError("r_floor must lie in (0, 1)")
        if not self.eps_mag > 0:
            raise ValueError("eps_mag must be positive")


@dataclass(frozen=True)
class FusionConfig:
    alpha: float = 0.1
    tie_break: str = "binaural"

    def __post_init__(self):
        if self.alpha not in CHI2_1_UPPER:
            raise ValueError(f"alpha must be one of {sorted(CHI2_1_UPPER)}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")


@dataclass(frozen=True)
class IoConfig:
    channel_map: tuple[int, int, int, int] = (0, 1, 2, 3)
    activity_threshold_db: float = -70.0


@dataclass(frozen=True)
class RunConfig:
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    stft: StftConfig = field(default_factory=StftConfig)
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    fit: FitPolicy = field(default_factory=FitPolicy)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    io: IoConfig = field(default_factory=IoConfig)


_SECTIONS = {
    "geometry": ArrayGeometry,
    "stft": StftConfig,
    "smoothing": SmoothingConfig,
    "fit": FitPolicy,
    "fusion": FusionConfig,
    "tracker": TrackerConfig,
    "io": IoConfig,
}


def _build(cls, values: dict, section: str):
    names = {f.name for f in dataclasses.fields(cls)}
    if section == "geometry":
        names.discard("channel_map")  # set through [io]
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {sorted(unknown)}")
    kw = dict(values)
    if "channel_map" in kw:
        kw["channel_map"] = tuple(kw["channel_map"])
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def config_from_dict(d: dict) -> RunConfig:
    unknown = set(d) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    parts = {}
    for name, cls in _SECTIONS.items():
        section = d.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"[{name}] must be a table")
        parts[name] = _build(cls, section, name)
    try:
        parts["geometry"] = dataclasses.replace(parts["geometry"], channel_map=parts["io"].channel_map)
    except ValueError as exc:
        raise ConfigError(f"[io] {exc}") from exc
    return RunConfig(**parts)


def load_toml(path) -> dict:
    with open(Path(path), "rb") as fh:
        return tomllib.load(fh)


def load_config(path=None) -> RunConfig:
    """Load a :class:`RunConfig`; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        data = load_toml(path)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)
