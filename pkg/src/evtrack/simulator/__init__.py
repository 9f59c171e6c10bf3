"""
Synthetic fish-tank scenes and the contrast-threshold event emulator.
"""

from evtrack.simulator.emulator import (
    SimulationResult,
    generate_events,
    render_frames,
    render_log_intensity,
    simulate,
    trigger_times,
)
from evtrack.simulator.scene import AgentSpec, SceneConfig, Trajectory, load_scene, stock_scene

__all__ = [
    "SimulationResult", "generate_events", "render_frames", "render_log_intensity",
    "simulate", "trigger_times", "AgentSpec", "SceneConfig", "Trajectory",
    "load_scene", "stock_scene",
]
