"""
Scene configuration for the synthetic fish tank: sensor, timing, contrast and
moving elliptical agents.

Scene files are YAML:

    sensor:   {width: 128, height: 128}
    timing:   {duration_us: 10000000, micro_step_us: 100, frame_rate: 120}
    contrast: {threshold: 0.2, background: 0.25, white_level: 2.0}
    seed: 0
    speed_scale: 1.0
    agents:
      - semi_axes: [6, 3]
        intensity: 1.0
        shimmer: {amplitude: 0.6, hz: 10}
        trajectory: {kind: sinusoid, center: [64, 64], amplitude: [40, 3],
                     frequency_hz: [0.25, 0.5]}          # phase drawn from seed
      - trajectory: {kind: waypoints, points: [[0, 20, 20], [5000000, 100, 30]]}

Stock scenes fish1 ... fish6 can be named wherever a scene file is accepted.
"""

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from loguru import logger
from scipy.interpolate import CubicSpline

from evtrack.events import SensorGeometry
from evtrack.exceptions import SceneError

STOCK_SCENE = re.compile(r'^fish([1-6])$')
TRAJECTORY_KINDS = ('sinusoid', 'waypoints')
# Samples per scene used to check that paths stay on the sensor.
PATH_CHECK_SAMPLES = 1000


@dataclass(frozen=True)
class Trajectory:
    """
    Parametric agent path.

    sinusoid:  x = cx + ax sin(2 pi fx k t + px), likewise for y, with k = speed_scale
    waypoints: (t_us, x, y) points joined by a cubic spline, held at the ends
    """
    kind: str = 'sinusoid'
    center: Tuple[float, float] = (0.0, 0.0)
    amplitude: Tuple[float, float] = (0.0, 0.0)
    frequency_hz: Tuple[float, float] = (0.0, 0.0)
    phase: Tuple[float, float] = (0.0, 0.0)
    waypoints: Tuple[Tuple[float, float, float], ...] = ()
    _spline: Optional[CubicSpline] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise SceneError(f"trajectory kind must be one of {TRAJECTORY_KINDS}, got '{self.kind}'")
        if self.kind == 'waypoints':
            points = np.asarray(self.waypoints, dtype=np.float64)
            if points.ndim != 2 or points.shape[1] != 3 or len(points) < 2:
                raise SceneError("waypoints need at least two (t_us, x, y) points")
            if np.any(np.diff(points[:, 0]) <= 0):
                raise SceneError("waypoint times must be strictly increasing")
            object.__setattr__(self, '_spline', CubicSpline(points[:, 0], points[:, 1:]))
        elif any(f < 0 for f in self.frequency_hz):
            raise SceneError(f"frequencies must be non-negative, got {self.frequency_hz}")

    def position(self, t_us: float, speed_scale: float = 1.0) -> Tuple[float, float]:
        """Centre in pixels at t_us."""
        if self.kind == 'waypoints':
            x, y = self._spline(self._clip(t_us * speed_scale))
            return float(x), float(y)
        t = t_us * 1e-6
        return tuple(
            c + a * math.sin(2.0 * math.pi * f * speed_scale * t + p)
            for c, a, f, p in zip(self.center, self.amplitude, self.frequency_hz, self.phase)
        )

    def velocity(self, t_us: float, speed_scale: float = 1.0) -> Tuple[float, float]:
        """Velocity in pixels per second at t_us."""
        if self.kind == 'waypoints':
            tau = t_us * speed_scale
            if tau <= self.waypoints[0][0] or tau >= self.waypoints[-1][0]:
                return 0.0, 0.0
            vx, vy = self._spline(tau, 1) * speed_scale * 1e6
            return float(vx), float(vy)
        t = t_us * 1e-6
        return tuple(
            a * 2.0 * math.pi * f * speed_scale * math.cos(2.0 * math.pi * f * speed_scale * t + p)
            for a, f, p in zip(self.amplitude, self.frequency_hz, self.phase)
        )

    def _clip(self, tau: float) -> float:
        return min(max(tau, self.waypoints[0][0]), self.waypoints[-1][0])


@dataclass(frozen=True)
class AgentSpec:
    """
    One elliptical agent.

    Its log intensity is log(intensity) + shimmer_amplitude * sin(2 pi shimmer_hz t + shimmer_phase);
    heading is used while the agent stands still.
    """
    semi_axes: Tuple[float, float] = (6.0, 3.0)
    intensity: float = 1.0
    trajectory: Trajectory = field(default_factory=Trajectory)
    shimmer_amplitude: float = 0.0
    shimmer_hz: float = 0.0
    shimmer_phase: float = 0.0
    heading: float = 0.0

    def __post_init__(self):
        a, b = self.semi_axes
        if a < 1 or b < 1:
            raise SceneError(f"semi-axes must be >= 1 px, got {self.semi_axes}")
        if not self.intensity > 0:
            raise SceneError(f"agent intensity must be positive, got {self.intensity}")
        if self.shimmer_amplitude < 0 or self.shimmer_hz < 0:
            raise SceneError("shimmer amplitude and frequency must be non-negative")

    def log_intensity(self, t_us: float) -> float:
        value = math.log(self.intensity)
        if self.shimmer_amplitude:
            value += self.shimmer_amplitude * math.sin(
                2.0 * math.pi * self.shimmer_hz * t_us * 1e-6 + self.shimmer_phase
            )
        return value


@dataclass(frozen=True)
class SceneConfig:
    """Everything simulate needs; a pure value."""
    geometry: SensorGeometry = field(default_factory=lambda: SensorGeometry(128, 128))
    duration_us: int = 10_000_000
    micro_step_us: int = 100
    contrast_threshold: float = 0.2
    background_intensity: float = 0.25
    agents: Tuple[AgentSpec, ...] = ()
    frame_rate: float = 120.0
    seed: int = 0
    speed_scale: float = 1.0
    white_level: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, 'agents', tuple(self.agents))
        if self.duration_us < 0:
            raise SceneError(f"duration must be non-negative, got {self.duration_us}")
        if self.micro_step_us < 1:
            raise SceneError(f"micro_step must be >= 1 us, got {self.micro_step_us}")
        if not self.contrast_threshold > 0:
            raise SceneError(f"contrast threshold must be positive, got {self.contrast_threshold}")
        if not self.background_intensity > 0:
            raise SceneError(f"background intensity must be positive, got {self.background_intensity}")
        if not self.frame_rate > 0:
            raise SceneError(f"frame rate must be positive, got {self.frame_rate}")
        if not self.speed_scale >= 0:
            raise SceneError(f"speed_scale must be non-negative, got {self.speed_scale}")
        if not self.white_level > 0:
            raise SceneError(f"white level must be positive, got {self.white_level}")
        self._check_paths()

    def _check_paths(self) -> None:
        times = np.linspace(0.0, float(self.duration_us), PATH_CHECK_SAMPLES)
        width, height = self.geometry.width, self.geometry.height
        for k, agent in enumerate(self.agents):
            reach = max(agent.semi_axes)
            for t in times:
                x, y = agent.trajectory.position(t, self.speed_scale)
                if x - reach < 0 or x + reach > width or y - reach < 0 or y + reach > height:
                    raise SceneError(
                        f"agent {k} leaves the {self.geometry} sensor at t={int(t)} us "
                        f"(centre {x:.1f}, {y:.1f})"
                    )

    def with_speed_scale(self, speed_scale: float) -> 'SceneConfig':
        return replace(self, speed_scale=speed_scale)


def stock_scene(name: str, seed: int = 0) -> SceneConfig:
    """
    Stock scene fishK (K = 1..6): 128x128 px, 10 s, 120 Hz, C = 0.2.

    Each fish swims back and forth in its own horizontal lane. The vertical
    wiggle runs at twice the horizontal frequency and peaks at the
    turnarounds, which keeps every fish within about 20 degrees of horizontal.
    Frequencies, amplitudes and phases are drawn from the seed.
    """
    match = STOCK_SCENE.match(name)
    if not match:
        raise SceneError(f"unknown stock scene '{name}' (expected fish1 ... fish6)")
    count = int(match.group(1))
    rng = np.random.default_rng(seed)
    geometry = SensorGeometry(128, 128)
    lane = geometry.height / count
    a, b = 6.0, 3.0

    agents = []
    for k in range(count):
        f = float(rng.uniform(0.2, 0.3))
        phi = float(rng.uniform(0.0, 2.0 * math.pi))
        ax = float(rng.uniform(32.0, 40.0))
        ay = min(3.0, lane / 2.0 - a - 2.0)
        trajectory = Trajectory(
            kind='sinusoid',
            center=(geometry.width / 2.0, (k + 0.5) * lane),
            amplitude=(ax, ay),
            frequency_hz=(f, 2.0 * f),
            phase=(phi, 2.0 * phi + math.pi / 2.0),
        )
        agents.append(AgentSpec(
            semi_axes=(a, b),
            intensity=1.0,
            trajectory=trajectory,
            shimmer_amplitude=0.6,
            shimmer_hz=10.0,
            shimmer_phase=float(rng.uniform(0.0, 2.0 * math.pi)),
        ))

    return SceneConfig(geometry=geometry, agents=tuple(agents), seed=seed)


SECTIONS = {
    'sensor': {'width', 'height'},
    'timing': {'duration_us', 'micro_step_us', 'frame_rate'},
    'contrast': {'threshold', 'background', 'white_level'},
}
TOP_LEVEL = set(SECTIONS) | {'seed', 'speed_scale', 'agents'}
AGENT_KEYS = {'semi_axes', 'intensity', 'trajectory', 'shimmer', 'heading'}
TRAJECTORY_KEYS = {'kind', 'center', 'amplitude', 'frequency_hz', 'phase', 'points'}
SHIMMER_KEYS = {'amplitude', 'hz', 'phase'}


def _check_keys(section: str, data: Any, allowed: set) -> Dict[str, Any]:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise SceneError(f"scene section '{section}' must be a mapping")
    unknown = set(data) - allowed
    if unknown:
        raise SceneError(f"unknown key(s) in '{section}': {', '.join(sorted(unknown))}")
    return data


def _pair(value: Any, name: str) -> Tuple[float, float]:
    if isinstance(value, (int, float)):
        return float(value), float(value)
    if not isinstance(value, Sequence) or len(value) != 2:
        raise SceneError(f"'{name}' must be a number or a pair, got {value!r}")
    return float(value[0]), float(value[1])


def _parse_agent(index: int, data: Any, rng: np.random.Generator) -> AgentSpec:
    where = f"agents[{index}]"
    data = _check_keys(where, data, AGENT_KEYS)
    traj = _check_keys(f"{where}.trajectory", data.get('trajectory'), TRAJECTORY_KEYS)
    shimmer = _check_keys(f"{where}.shimmer", data.get('shimmer'), SHIMMER_KEYS)

    kind = traj.get('kind', 'sinusoid')
    if kind == 'waypoints':
        trajectory = Trajectory(
            kind='waypoints',
            waypoints=tuple(tuple(float(v) for v in p) for p in traj.get('points', ())),
        )
    else:
        # missing phases come from the scene seed
        phase = traj.get('phase')
        trajectory = Trajectory(
            kind=kind,
            center=_pair(traj.get('center', 0.0), 'center'),
            amplitude=_pair(traj.get('amplitude', 0.0), 'amplitude'),
            frequency_hz=_pair(traj.get('frequency_hz', 0.0), 'frequency_hz'),
            phase=_pair(phase, 'phase') if phase is not None
            else tuple(float(v) for v in rng.uniform(0.0, 2.0 * math.pi, 2)),
        )

    shimmer_phase = shimmer.get('phase')
    return AgentSpec(
        semi_axes=_pair(data.get('semi_axes', (6.0, 3.0)), 'semi_axes'),
        intensity=float(data.get('intensity', 1.0)),
        trajectory=trajectory,
        shimmer_amplitude=float(shimmer.get('amplitude', 0.0)),
        shimmer_hz=float(shimmer.get('hz', 0.0)),
        shimmer_phase=float(shimmer_phase) if shimmer_phase is not None
        else float(rng.uniform(0.0, 2.0 * math.pi)),
        heading=float(data.get('heading', 0.0)),
    )


def parse_scene(data: Any, seed: Optional[int] = None) -> SceneConfig:
    """
    Build a SceneConfig from parsed YAML.

    Args:
        data: Mapping loaded from a scene file
        seed: Overrides the file's seed when given

    Raises:
        SceneError: Unknown keys, invalid values or agents leaving the sensor
    """
    data = _check_keys('scene', data, TOP_LEVEL)
    sensor = _check_keys('sensor', data.get('sensor'), SECTIONS['sensor'])
    timing = _check_keys('timing', data.get('timing'), SECTIONS['timing'])
    contrast = _check_keys('contrast', data.get('contrast'), SECTIONS['contrast'])
    seed = int(data.get('seed', 0)) if seed is None else seed
    rng = np.random.default_rng(seed)

    agents_data = data.get('agents') or []
    if not isinstance(agents_data, list):
        raise SceneError("'agents' must be a list")

    try:
        geometry = SensorGeometry(int(sensor.get('width', 128)), int(sensor.get('height', 128)))
        agents = tuple(_parse_agent(i, a, rng) for i, a in enumerate(agents_data))
        return SceneConfig(
            geometry=geometry,
            duration_us=int(timing.get('duration_us', 10_000_000)),
            micro_step_us=int(timing.get('micro_step_us', 100)),
            frame_rate=float(timing.get('frame_rate', 120.0)),
            contrast_threshold=float(contrast.get('threshold', 0.2)),
            background_intensity=float(contrast.get('background', 0.25)),
            white_level=float(contrast.get('white_level', 2.0)),
            agents=agents,
            seed=seed,
            speed_scale=float(data.get('speed_scale', 1.0)),
        )
    except SceneError:
        raise
    except (TypeError, ValueError) as e:
        raise SceneError(f"invalid scene: {e}")


def load_scene(source: Union[str, Path], seed: Optional[int] = None) -> SceneConfig:
    """Load a scene file, or a stock scene by name (fish1 ... fish6)."""
    if isinstance(source, str) and STOCK_SCENE.match(source):
        return stock_scene(source, 0 if seed is None else seed)
    try:
        with open(source, 'r', encoding='utf-8') as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise SceneError(f"{source}: not valid YAML ({e})")
    scene = parse_scene(data, seed)
    logger.debug("loaded scene {} with {} agent(s)", source, len(scene.agents))
    return scene
