"""
evtrack - event-camera multi-animal tracking.

Time surfaces, blob detection, SORT tracking, tracking metrics and a
synthetic event-camera simulator, usable as a library or through the
``evtrack`` command.
"""

from loguru import logger

__version__ = "0.1.0"

from evtrack.core import (  # noqa: E402
    detect_files,
    evaluate_files,
    render_files,
    simulate_to_files,
    stream_info,
    track_files,
    warp_file,
)
from evtrack.events import Event, EventStream, SensorGeometry  # noqa: E402
from evtrack.exceptions import EvtrackError  # noqa: E402
from evtrack.timesurface import DecayParams, TimeSurface  # noqa: E402
from evtrack.tracking.sort import Tracker, TrackerParams  # noqa: E402

logger.disable("evtrack")

__all__ = [
    "Event", "EventStream", "SensorGeometry", "TimeSurface", "DecayParams",
    "Tracker", "TrackerParams", "EvtrackError",
    "simulate_to_files", "track_files", "detect_files", "render_files",
    "evaluate_files", "warp_file", "stream_info", "__version__",
]
