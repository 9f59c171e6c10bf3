"""
SORT-style multi-object tracker: Kalman prediction, IoU association and
track lifecycle (tentative -> confirmed -> deleted).
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from loguru import logger

from evtrack.detection.boxes import BBox, Detection
from evtrack.exceptions import TrackingError
from evtrack.tracking.assignment import associate
from evtrack.tracking.kalman import KalmanTrack, NoiseParams, TrackStatus, bbox_to_z


@dataclass(frozen=True)
class TrackerParams:
    """Association threshold, lifecycle limits (in snapshots) and noise scales."""
    iou_threshold: float = 0.3
    max_age: int = 5
    min_hits: int = 3
    noise: NoiseParams = field(default_factory=NoiseParams)
    emit_tentative: bool = False

    def __post_init__(self):
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold must be in [0, 1], got {self.iou_threshold}")
        if self.max_age < 1:
            raise ValueError(f"max_age must be >= 1, got {self.max_age}")
        if self.min_hits < 1:
            raise ValueError(f"min_hits must be >= 1, got {self.min_hits}")


@dataclass(frozen=True)
class TrackedBox:
    """One track's box at one snapshot."""
    id: int
    box: BBox
    t: int
    status: TrackStatus


class Tracker:
    """
    Track state across snapshots.

    Single-threaded: step calls must be sequential. Ids start at 1 and are
    never reused within one Tracker.
    """

    def __init__(self, params: TrackerParams = TrackerParams()):
        self.params = params
        self.tracks: List[KalmanTrack] = []
        self.last_t: Optional[int] = None
        self._next_id = 1
        self.created = 0
        self.deleted = 0

    def step(self, dets: Sequence[Detection], t: int) -> List[TrackedBox]:
        """
        Advance one snapshot.

        Returns:
            Boxes of confirmed tracks matched at t (tentative ones too with
            emit_tentative), ordered by id

        Raises:
            TrackingError: t earlier than the previous step
        """
        if self.last_t is not None and t < self.last_t:
            raise TrackingError(f"step at t={t} before previous step at t={self.last_t}")
        self.last_t = t

        boxes = []
        for d in dets:
            if d.box.width <= 0 or d.box.height <= 0:
                logger.warning("ignoring zero-area detection {} at t={}", d.box, t)
                continue
            boxes.append(d.box)

        predicted = [trk.predict() for trk in self.tracks]
        matches, unmatched_dets, unmatched_tracks = associate(
            boxes, predicted, self.params.iou_threshold
        )

        matched_ids = set()
        for d, k in matches:
            trk = self.tracks[k]
            trk.update(bbox_to_z(boxes[d]))
            trk.last_t = t
            if trk.hits >= self.params.min_hits:
                trk.status = TrackStatus.CONFIRMED
            matched_ids.add(trk.id)

        for k in unmatched_tracks:
            self.tracks[k].mark_missed()

        for d in unmatched_dets:
            trk = KalmanTrack(self._next_id, boxes[d], t, self.params.noise)
            self._next_id += 1
            self.created += 1
            if trk.hits >= self.params.min_hits:
                trk.status = TrackStatus.CONFIRMED
            self.tracks.append(trk)
            matched_ids.add(trk.id)

        alive = []
        for trk in self.tracks:
            if trk.misses > self.params.max_age:
                trk.status = TrackStatus.DELETED
                self.deleted += 1
                logger.debug("track {} deleted at t={}", trk.id, t)
            else:
                alive.append(trk)
        self.tracks = alive

        out = []
        for trk in self.tracks:
            if trk.id not in matched_ids:
                continue
            if trk.status is TrackStatus.CONFIRMED or self.params.emit_tentative:
                out.append(TrackedBox(trk.id, trk.box, t, trk.status))
        out.sort(key=lambda b: b.id)
        return out
