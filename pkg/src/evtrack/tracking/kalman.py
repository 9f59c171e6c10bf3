"""
Constant-velocity Kalman filter over box state [u, v, s, r, du, dv, ds].

u, v: box centre (px); s: area (px^2); r: aspect ratio w/h (constant).
Velocities are per snapshot interval.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np
from filterpy.kalman import KalmanFilter

from evtrack.detection.boxes import BBox
from evtrack.exceptions import TrackingError

# Smallest area and aspect ratio a predicted box may take.
SCALE_FLOOR = 1e-3
ASPECT_FLOOR = 1e-3


class TrackStatus(str, Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


@dataclass(frozen=True)
class NoiseParams:
    """Covariance scales; see TrackerConfig for the documented defaults."""
    position_var: float = 10.0
    velocity_var: float = 1000.0
    process_noise: float = 1e-2
    scale_rate_noise: float = 1e-4
    measurement_noise: Tuple[float, float, float, float] = (1.0, 1.0, 10.0, 1e-2)

    def __post_init__(self):
        values = (self.position_var, self.velocity_var, self.process_noise,
                  self.scale_rate_noise, *self.measurement_noise)
        if len(self.measurement_noise) != 4:
            raise ValueError("measurement_noise needs 4 entries")
        if any(not (v > 0 and math.isfinite(v)) for v in values):
            raise ValueError(f"noise scales must be positive and finite: {self}")


def bbox_to_z(box: BBox) -> np.ndarray:
    """Corner box to measurement [u, v, s, r] (column vector)."""
    w, h = box.width, box.height
    if w <= 0 or h <= 0:
        raise TrackingError(f"box has no area: {box}")
    u, v = box.center
    return np.array([u, v, w * h, w / h], dtype=np.float64).reshape(4, 1)


def z_to_bbox(z: Sequence[float]) -> BBox:
    """[u, v, s, r, ...] to a corner box with w = sqrt(s r), h = sqrt(s / r)."""
    u, v, s, r = (float(val) for val in np.asarray(z, dtype=np.float64).ravel()[:4])
    s = max(s, SCALE_FLOOR)
    r = max(r, ASPECT_FLOOR)
    w = math.sqrt(s * r)
    h = math.sqrt(s / r)
    return BBox(u - w / 2.0, v - h / 2.0, u + w / 2.0, v + h / 2.0)


def transition_matrix() -> np.ndarray:
    F = np.eye(7)
    F[0, 4] = F[1, 5] = F[2, 6] = 1.0
    return F


def measurement_matrix() -> np.ndarray:
    H = np.zeros((4, 7))
    H[:4, :4] = np.eye(4)
    return H


class KalmanTrack:
    """One tracked agent: filter state plus lifecycle counters."""

    def __init__(self, track_id: int, box: BBox, t: int, noise: NoiseParams = NoiseParams()):
        kf = KalmanFilter(dim_x=7, dim_z=4)
        kf.F = transition_matrix()
        kf.H = measurement_matrix()
        kf.P = np.diag([noise.position_var] * 4 + [noise.velocity_var] * 3)
        kf.Q = np.eye(7) * noise.process_noise
        kf.Q[6, 6] = noise.scale_rate_noise
        kf.R = np.diag(noise.measurement_noise)
        kf.x[:4] = bbox_to_z(box)
        self.kf = kf

        self.id = track_id
        self.hits = 1
        self.misses = 0
        self.status = TrackStatus.TENTATIVE
        self.first_t = t
        self.last_t = t

    @property
    def state(self) -> np.ndarray:
        """State mean as a flat 7-vector."""
        return self.kf.x.ravel().copy()

    @property
    def covariance(self) -> np.ndarray:
        return self.kf.P.copy()

    @property
    def box(self) -> BBox:
        return z_to_bbox(self.kf.x)

    def predict(self) -> BBox:
        """Advance one snapshot and return the predicted box."""
        if self.status is TrackStatus.DELETED:
            raise TrackingError(f"track {self.id} is deleted")
        self.kf.predict()
        if self.kf.x[2, 0] <= SCALE_FLOOR:
            self.kf.x[2, 0] = SCALE_FLOOR
            self.kf.x[6, 0] = 0.0
        return self.box

    def update(self, z: np.ndarray) -> None:
        """
        Correct with measurement [u, v, s, r].

        Raises:
            TrackingError: Non-finite measurement
        """
        z = np.asarray(z, dtype=np.float64).reshape(4, 1)
        if not np.all(np.isfinite(z)):
            raise TrackingError(f"non-finite measurement for track {self.id}: {z.ravel()}")
        self.kf.update(z)
        self.kf.P = (self.kf.P + self.kf.P.T) / 2.0
        self.hits += 1
        self.misses = 0

    def mark_missed(self) -> None:
        self.hits = 0
        self.misses += 1

    def __repr__(self) -> str:
        return f"KalmanTrack(id={self.id}, {self.status.value}, hits={self.hits}, misses={self.misses})"
