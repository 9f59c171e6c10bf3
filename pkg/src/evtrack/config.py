"""
Pipeline configuration: the defaults table and the YAML config loader.

Precedence is command-line flag > config file > defaults below.

    surface:   {tau_us: 50000}
    detection: {threshold: 0.35, min_area: 15, connectivity: 8}
    tracker:   {iou_threshold: 0.3, max_age: 5, min_hits: 3, emit_tentative: false, ...}
    sync:      {window: since_prev}            # or half_open with window_us
    scene: fish3
    calib: rig.calib
    seed: 0
"""

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml
from loguru import logger

from evtrack.detection.blobs import BlobParams
from evtrack.exceptions import ConfigError
from evtrack.sync import WindowPolicy
from evtrack.timesurface import DecayParams
from evtrack.tracking.kalman import NoiseParams
from evtrack.tracking.sort import TrackerParams


@dataclass(frozen=True)
class SurfaceConfig:
    tau_us: float = 50_000.0

    def build(self) -> DecayParams:
        return DecayParams(self.tau_us)


@dataclass(frozen=True)
class BlobConfig:
    threshold: float = 0.35
    min_area: int = 15
    connectivity: int = 8

    def build(self) -> BlobParams:
        return BlobParams(self.threshold, self.min_area, self.connectivity)


@dataclass(frozen=True)
class TrackerConfig:
    iou_threshold: float = 0.3
    max_age: int = 5
    min_hits: int = 3
    position_var: float = 10.0
    velocity_var: float = 1000.0
    process_noise: float = 1e-2
    scale_rate_noise: float = 1e-4
    measurement_noise: Tuple[float, float, float, float] = (1.0, 1.0, 10.0, 1e-2)
    emit_tentative: bool = False

    def build(self) -> TrackerParams:
        noise = NoiseParams(
            position_var=self.position_var,
            velocity_var=self.velocity_var,
            process_noise=self.process_noise,
            scale_rate_noise=self.scale_rate_noise,
            measurement_noise=tuple(self.measurement_noise),
        )
        return TrackerParams(
            iou_threshold=self.iou_threshold,
            max_age=self.max_age,
            min_hits=self.min_hits,
            noise=noise,
            emit_tentative=self.emit_tentative,
        )


@dataclass(frozen=True)
class SyncConfig:
    window: str = 'since_prev'
    window_us: Optional[int] = None

    def build(self) -> WindowPolicy:
        return WindowPolicy(self.window, self.window_us)


@dataclass(frozen=True)
class PipelineConfig:
    surface: SurfaceConfig = field(default_factory=SurfaceConfig)
    detection: BlobConfig = field(default_factory=BlobConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    sync: SyncConfig = field(default_factory=SyncConfig)
    scene: Optional[str] = None
    calib: Optional[str] = None
    seed: int = 0

    def validate(self) -> 'PipelineConfig':
        """Build every parameter object once so bad values fail before any work."""
        try:
            self.surface.build()
            self.detection.build()
            self.tracker.build()
            self.sync.build()
        except ValueError as e:
            raise ConfigError(str(e))
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


SECTIONS = {
    'surface': SurfaceConfig,
    'detection': BlobConfig,
    'tracker': TrackerConfig,
    'sync': SyncConfig,
}
SCALARS = {'scene': str, 'calib': str, 'seed': int}


def _coerce(section: str, key: str, value: Any, default: Any) -> Any:
    """Check a config value against the type of its default."""
    where = f"{section}.{key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"'{where}' must be true or false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{where}' must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{where}' must be a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"'{where}' must be a list of {len(default)} numbers")
        return tuple(_coerce(section, key, v, d) for v, d in zip(value, default))
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"'{where}' must be a string, got {value!r}")
        return value
    # Optional[int] defaults to None
    if value is not None and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"'{where}' must be an integer, got {value!r}")
    return value


def parse_config(data: Any, base: PipelineConfig = PipelineConfig()) -> PipelineConfig:
    """
    Overlay parsed YAML onto a base configuration.

    Raises:
        ConfigError: Unknown section or key, or a badly typed or out-of-range value
    """
    if data is None:
        return base
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections")

    updates: Dict[str, Any] = {}
    for name, value in data.items():
        if name in SECTIONS:
            if value is None:
                continue
            if not isinstance(value, dict):
                raise ConfigError(f"section '{name}' must be a mapping")
            current = getattr(base, name)
            known = {f.name for f in fields(current)}
            changes = {}
            for key, raw in value.items():
                if key not in known:
                    raise ConfigError(f"unknown key '{name}.{key}'")
                default = getattr(type(current)(), key)
                changes[key] = _coerce(name, key, raw, default)
            updates[name] = replace(current, **changes)
        elif name in SCALARS:
            if value is None:
                continue
            if (isinstance(value, bool) or not isinstance(value, SCALARS[name])):
                raise ConfigError(f"'{name}' must be a {SCALARS[name].__name__}, got {value!r}")
            updates[name] = value
        else:
            raise ConfigError(f"unknown configuration section '{name}'")

    return replace(base, **updates).validate()


def load_config(path: Optional[Union[str, Path]]) -> PipelineConfig:
    """Read a YAML pipeline configuration; None gives the defaults."""
    if path is None:
        return PipelineConfig()
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML ({e})")
    config = parse_config(data)
    logger.debug("loaded configuration from {}", path)
    return config
