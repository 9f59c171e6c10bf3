"""
Multi-object tracking: Kalman tracks, optimal assignment and the SORT loop.
"""

from evtrack.tracking.assignment import associate, hungarian
from evtrack.tracking.kalman import KalmanTrack, NoiseParams, TrackStatus, bbox_to_z, z_to_bbox
from evtrack.tracking.sort import TrackedBox, Tracker, TrackerParams

__all__ = [
    "associate", "hungarian", "KalmanTrack", "NoiseParams", "TrackStatus",
    "bbox_to_z", "z_to_bbox", "TrackedBox", "Tracker", "TrackerParams",
]
