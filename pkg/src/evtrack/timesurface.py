"""
Time surfaces: per-pixel, per-polarity maps of the latest event timestamp,
rendered on demand as exponentially decayed intensity images

    I(x, y, p) = exp(-(t_query - T(x, y, p)) / tau)

Pixels that never saw an event render as exactly 0.0.

Single writer: update/update_many/reset must not run concurrently with
anything else; decayed_image/snapshot_pair may run concurrently with each other.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from evtrack.events import Event, EventStream, SensorGeometry
from evtrack.exceptions import EventFormatError, GeometryError, StreamOrderError

NEVER = -1
MAX_TIMESTAMP = 2**63 - 1
NEGATIVE, POSITIVE = 0, 1


@dataclass(frozen=True)
class DecayParams:
    """Exponential decay constant in microseconds."""
    tau_us: float = 50_000.0

    def __post_init__(self):
        if not self.tau_us > 0:
            raise ValueError(f"tau must be positive, got {self.tau_us}")


def channel(p: int) -> int:
    """Channel index of a polarity: 0 for -1, 1 for +1."""
    if p == 1:
        return POSITIVE
    if p == -1:
        return NEGATIVE
    raise ValueError(f"Invalid polarity {p}")


class TimeSurface:
    """
    Latest-event timestamp grid of shape (height, width, 2).

    Timestamps are held as int64 with NEVER (-1) marking untouched cells, so
    the supported timestamp range is [0, MAX_TIMESTAMP]; larger u64 values are
    rejected at ingest.
    """

    def __init__(self, geometry: SensorGeometry):
        self.geometry = geometry
        self._T = np.full((geometry.height, geometry.width, 2), NEVER, dtype=np.int64)
        self.last_ingested_t = 0

    def timestamp(self, x: int, y: int, p: int) -> Optional[int]:
        """Latest timestamp at a cell, or None if it never fired."""
        value = int(self._T[y, x, channel(p)])
        return None if value == NEVER else value

    @property
    def grid(self) -> np.ndarray:
        """Read-only view of the raw timestamp grid."""
        view = self._T.view()
        view.flags.writeable = False
        return view

    def update(self, e: Event) -> None:
        """
        Ingest one event in O(1).

        Raises:
            EventFormatError: Timestamp above MAX_TIMESTAMP
            GeometryError: Event outside the sensor
            StreamOrderError: Event older than the last ingested one
        """
        t, x, y, p = int(e[0]), int(e[1]), int(e[2]), int(e[3])
        if t > MAX_TIMESTAMP:
            raise EventFormatError(f"timestamp {t} above the supported maximum {MAX_TIMESTAMP}")
        if not self.geometry.contains(x, y):
            raise GeometryError(f"pixel ({x}, {y}) outside {self.geometry}")
        if t < self.last_ingested_t:
            raise StreamOrderError(
                f"event at t={t} older than last ingested t={self.last_ingested_t}"
            )
        self._T[y, x, channel(p)] = t
        self.last_ingested_t = t

    def update_many(self, events: Union[EventStream, np.ndarray]) -> None:
        """
        Ingest a time-ordered batch; same result as calling update per event.

        The batch is checked as a whole before anything is written, so a
        rejected batch leaves the surface untouched.
        """
        array = events.array if isinstance(events, EventStream) else events
        if len(array) == 0:
            return

        over = np.nonzero(array['t'] > np.uint64(MAX_TIMESTAMP))[0]
        if over.size:
            i = int(over[0])
            raise EventFormatError(
                f"timestamp {int(array['t'][i])} above the supported maximum {MAX_TIMESTAMP}", i
            )
        t = array['t'].astype(np.int64)
        x = array['x'].astype(np.int64)
        y = array['y'].astype(np.int64)
        p = array['p']

        if int(t[0]) < self.last_ingested_t:
            raise StreamOrderError(
                f"event at t={int(t[0])} older than last ingested t={self.last_ingested_t}", 0
            )
        back = np.nonzero(t[1:] < t[:-1])[0]
        if back.size:
            raise StreamOrderError("batch is not time-ordered", int(back[0]) + 1)
        outside = np.nonzero((x >= self.geometry.width) | (y >= self.geometry.height))[0]
        if outside.size:
            i = int(outside[0])
            raise GeometryError(f"pixel ({int(x[i])}, {int(y[i])}) outside {self.geometry}", i)
        if np.any((p != 1) & (p != -1)):
            raise ValueError("Invalid polarity in batch")

        flat = (y * self.geometry.width + x) * 2 + (p > 0)
        # last occurrence of each cell carries its latest timestamp
        cells, first = np.unique(flat[::-1], return_index=True)
        self._T.reshape(-1)[cells] = t[::-1][first]
        self.last_ingested_t = int(t[-1])

    def decayed_image(self, t_query: int, params: DecayParams, p: int) -> np.ndarray:
        """
        Render one polarity channel at t_query.

        Returns:
            float64 array (height, width) with values in [0, 1]

        Raises:
            StreamOrderError: t_query before the last ingested event
        """
        t_query = int(t_query)
        if t_query < self.last_ingested_t:
            raise StreamOrderError(
                f"query at t={t_query} precedes last ingested t={self.last_ingested_t}"
            )
        T = self._T[:, :, channel(p)]
        out = np.zeros(T.shape, dtype=np.float64)
        seen = T != NEVER
        age = (t_query - T[seen]).astype(np.float64)
        out[seen] = np.exp(-age / params.tau_us)
        return out

    def snapshot_pair(self, t_query: int, params: DecayParams) -> np.ndarray:
        """
        Render both channels at t_query.

        Returns:
            float64 array (2, height, width); channel 0 negative, channel 1 positive
        """
        return np.stack([
            self.decayed_image(t_query, params, -1),
            self.decayed_image(t_query, params, 1),
        ])

    def reset(self) -> None:
        """Forget every event."""
        self._T.fill(NEVER)
        self.last_ingested_t = 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSurface):
            return NotImplemented
        return (self.geometry == other.geometry
                and self.last_ingested_t == other.last_ingested_t
                and np.array_equal(self._T, other._T))


def update(surface: TimeSurface, e: Event) -> None:
    """Ingest one event into a surface."""
    surface.update(e)


def decayed_image(surface: TimeSurface, t_query: int, params: DecayParams, p: int) -> np.ndarray:
    """Render one polarity channel of a surface."""
    return surface.decayed_image(t_query, params, p)


def snapshot_pair(surface: TimeSurface, t_query: int, params: DecayParams) -> np.ndarray:
    """Render both polarity channels of a surface."""
    return surface.snapshot_pair(t_query, params)


def reset(surface: TimeSurface) -> None:
    """Clear a surface."""
    surface.reset()


def to_uint8(intensity: np.ndarray) -> np.ndarray:
    """Quantize intensities in [0, 1] to 8 bits: round(255 * value)."""
    return np.floor(np.clip(intensity, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def false_color(pair: np.ndarray) -> np.ndarray:
    """
    Combine a snapshot pair into an RGB image.

    Negative events go to the red channel, positive events to the blue channel.
    """
    _, height, width = pair.shape
    rgb = np.zeros((height, width, 3), dtype=np.uint8)
    rgb[:, :, 0] = to_uint8(pair[NEGATIVE])
    rgb[:, :, 2] = to_uint8(pair[POSITIVE])
    return rgb
