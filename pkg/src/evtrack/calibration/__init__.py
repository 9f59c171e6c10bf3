"""
Frame/event camera calibration: plane-induced homographies and event warping.
"""

from evtrack.calibration.calibfile import Calibration, load_calibration, parse_calibration
from evtrack.calibration.homography import (
    ApproximationReport,
    Homography,
    HomographyFactors,
    WarpResult,
    approximation_report,
    compose_homography,
    pixel_homography,
    rotational_approximation,
    warp_events,
    warp_point,
)

__all__ = [
    "Calibration", "load_calibration", "parse_calibration", "ApproximationReport",
    "Homography", "HomographyFactors", "WarpResult", "approximation_report",
    "compose_homography", "pixel_homography", "rotational_approximation",
    "warp_events", "warp_point",
]
