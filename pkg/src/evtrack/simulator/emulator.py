"""
Event emulation for simulated scenes.

Each pixel keeps a reference log intensity L_ref, initialised to L(x, y, 0).
At every micro-step boundary t, while |L(x, y, t) - L_ref| >= C the pixel
emits an event of polarity sign(L - L_ref) stamped t and moves L_ref by C
towards L. Events of one micro-step are ordered by (y, x); repeats of one
pixel are consecutive.
"""

import math
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np
from loguru import logger
from tqdm import tqdm

from evtrack.detection.boxes import BBox
from evtrack.events import EVENT_DTYPE, EventStream, SensorGeometry
from evtrack.formats.tracks import GroundTruth, GroundTruthBox
from evtrack.simulator.geometry import ellipse_box, ellipse_footprint, heading
from evtrack.simulator.scene import AgentSpec, SceneConfig
from evtrack.utils import round_half_up

LogIntensityProvider = Callable[[int], np.ndarray]


class SimulationResult(NamedTuple):
    stream: EventStream
    ground_truth: GroundTruth
    triggers: List[int]


def agent_pose(cfg: SceneConfig, agent: AgentSpec, t: int):
    """(cx, cy, theta) of an agent at t."""
    x, y = agent.trajectory.position(t, cfg.speed_scale)
    vx, vy = agent.trajectory.velocity(t, cfg.speed_scale)
    return x, y, heading(vx, vy, agent.heading)


def render_log_intensity(cfg: SceneConfig, t: int) -> np.ndarray:
    """
    Log-intensity grid (height, width) at t.

    Pixels whose centres fall inside an agent's ellipse carry that agent's
    log intensity (later agents paint over earlier ones); all others carry
    log(background).
    """
    width, height = cfg.geometry.width, cfg.geometry.height
    grid = np.full((height, width), math.log(cfg.background_intensity), dtype=np.float64)
    for agent in cfg.agents:
        cx, cy, theta = agent_pose(cfg, agent, t)
        a, b = agent.semi_axes
        rows, cols, mask = ellipse_footprint(cx, cy, a, b, theta, width, height)
        if mask.size:
            grid[rows, cols][mask] = agent.log_intensity(t)
    return grid


def ground_truth_at(cfg: SceneConfig, t: int) -> List[GroundTruthBox]:
    """Tight boxes of every agent at t, clipped to the sensor."""
    out = []
    for agent_id, agent in enumerate(cfg.agents, start=1):
        cx, cy, theta = agent_pose(cfg, agent, t)
        box = ellipse_box(cx, cy, agent.semi_axes[0], agent.semi_axes[1], theta)
        x1 = min(max(box.x1, 0.0), cfg.geometry.width)
        y1 = min(max(box.y1, 0.0), cfg.geometry.height)
        x2 = min(max(box.x2, 0.0), cfg.geometry.width)
        y2 = min(max(box.y2, 0.0), cfg.geometry.height)
        if x2 > x1 and y2 > y1:
            out.append(GroundTruthBox(agent_id, BBox(x1, y1, x2, y2)))
    return out


def trigger_times(cfg: SceneConfig) -> List[int]:
    """round(k * 1e6 / frame_rate) for k = 0, 1, ... while within the duration."""
    triggers = []
    k = 0
    while True:
        t = round_half_up(k * 1e6 / cfg.frame_rate)
        if t > cfg.duration_us:
            return triggers
        triggers.append(t)
        k += 1


def micro_steps(cfg: SceneConfig) -> np.ndarray:
    """Micro-step boundaries j * micro_step in (0, duration]."""
    count = cfg.duration_us // cfg.micro_step_us
    return np.arange(1, count + 1, dtype=np.int64) * cfg.micro_step_us


def generate_events(log_intensity_at: LogIntensityProvider, timestamps: Sequence[int],
                    C: float, L0: Optional[np.ndarray] = None,
                    progress: bool = False) -> EventStream:
    """
    Run the contrast-threshold model over any log-intensity provider.

    Args:
        log_intensity_at: Returns the (height, width) log-intensity grid at t
        timestamps: Increasing sample times; events are stamped with these
        C: Contrast threshold in log units
        L0: Initial reference levels (default: log_intensity_at(0))
        progress: Show a tqdm progress bar

    Returns:
        Time-ordered EventStream on a sensor the size of the grid
    """
    if not C > 0:
        raise ValueError(f"contrast threshold must be positive, got {C}")
    L_ref = np.array(log_intensity_at(0) if L0 is None else L0, dtype=np.float64)
    height, width = L_ref.shape
    geometry = SensorGeometry(width, height)

    chunks = []
    total = 0
    for t in tqdm(timestamps, desc="simulate", unit="step", disable=not progress):
        L = log_intensity_at(int(t))
        delta = L - L_ref
        counts = np.floor(np.abs(delta) / C)
        if not counts.any():
            continue
        sign = np.sign(delta)
        L_ref += sign * counts * C
        # rounding in counts * C can leave a full threshold unspent
        residual = np.abs(L - L_ref) >= C
        while residual.any():
            L_ref[residual] += sign[residual] * C
            counts[residual] += 1
            residual = np.abs(L - L_ref) >= C

        ys, xs = np.nonzero(counts)
        repeats = counts[ys, xs].astype(np.int64)
        n = int(repeats.sum())
        events = np.empty(n, dtype=EVENT_DTYPE)
        events['t'] = int(t)
        events['x'] = np.repeat(xs, repeats)
        events['y'] = np.repeat(ys, repeats)
        events['p'] = np.repeat(sign[ys, xs], repeats).astype(np.int8)
        chunks.append(events)
        total += n

    logger.debug("emulated {} events over {} steps", total, len(timestamps))
    if not chunks:
        return EventStream(geometry)
    return EventStream(geometry, np.concatenate(chunks))


def simulate(cfg: SceneConfig, progress: bool = False) -> SimulationResult:
    """
    Simulate a scene.

    Returns:
        (events, ground truth at every trigger, trigger timestamps)
    """
    triggers = trigger_times(cfg)
    stream = generate_events(
        lambda t: render_log_intensity(cfg, t),
        micro_steps(cfg),
        cfg.contrast_threshold,
        progress=progress,
    )
    ground_truth = {t: ground_truth_at(cfg, t) for t in triggers}
    logger.info(
        "simulated {} agent(s) for {:.2f} s: {} events, {} triggers",
        len(cfg.agents), cfg.duration_us / 1e6, len(stream), len(triggers),
    )
    return SimulationResult(stream, ground_truth, triggers)


def quantize_frame(log_intensity: np.ndarray, white_level: float) -> np.ndarray:
    """exp(L) mapped linearly onto 0..255, white_level -> 255, clipped."""
    linear = np.clip(np.exp(log_intensity) / white_level, 0.0, 1.0)
    return np.floor(linear * 255.0 + 0.5).astype(np.uint8)


def render_frames(cfg: SceneConfig) -> List[np.ndarray]:
    """Greyscale 8-bit frames at every trigger timestamp."""
    return [quantize_frame(render_log_intensity(cfg, t), cfg.white_level)
            for t in trigger_times(cfg)]
