"""
Event data model: single events, sensor geometry, array-backed streams,
and the stream validation pass.
"""

from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from evtrack.exceptions import GeometryError


# In-memory layout of one event. The on-disk layout lives in formats/events.py.
EVENT_DTYPE = np.dtype([('t', '<u8'), ('x', '<u2'), ('y', '<u2'), ('p', 'i1')])


class Event(NamedTuple):
    """One brightness-change record."""
    t: int  # microseconds
    x: int  # column
    y: int  # row
    p: int  # -1 or +1


@dataclass(frozen=True)
class SensorGeometry:
    """Pixel dimensions of a sensor."""
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise GeometryError(f"Invalid sensor geometry {self.width}x{self.height}")
        if self.width > 0xFFFF or self.height > 0xFFFF:
            raise GeometryError(
                f"Sensor geometry {self.width}x{self.height} exceeds 16-bit coordinates"
            )

    def contains(self, x: int, y: int) -> bool:
        """Check whether a pixel lies on the sensor."""
        return 0 <= x < self.width and 0 <= y < self.height

    def __str__(self) -> str:
        return f"{self.width}x{self.height}"


class EventStream:
    """
    Immutable, ordered sequence of events on a sensor.

    Backed by a read-only numpy structured array with fields t, x, y, p.
    Slicing returns another EventStream sharing the same memory.
    """

    def __init__(self, geometry: SensorGeometry, events: Optional[np.ndarray] = None):
        self.geometry = geometry
        if events is None:
            events = np.empty(0, dtype=EVENT_DTYPE)
        elif events.dtype != EVENT_DTYPE:
            events = events.astype(EVENT_DTYPE)
        elif events.flags.writeable:
            events = events.copy()
        events.flags.writeable = False
        self._events = events

    @classmethod
    def from_arrays(cls, geometry: SensorGeometry,
                    t: Sequence[int], x: Sequence[int],
                    y: Sequence[int], p: Sequence[int]) -> 'EventStream':
        """Build a stream from parallel column arrays."""
        t = np.asarray(t)
        events = np.empty(len(t), dtype=EVENT_DTYPE)
        events['t'] = t
        events['x'] = np.asarray(x)
        events['y'] = np.asarray(y)
        events['p'] = np.asarray(p)
        events.flags.writeable = False
        return cls(geometry, events)

    @classmethod
    def from_events(cls, geometry: SensorGeometry, events: Iterable[Event]) -> 'EventStream':
        """Build a stream from Event tuples."""
        rows = [tuple(e) for e in events]
        return cls(geometry, np.array(rows, dtype=EVENT_DTYPE))

    @classmethod
    def concatenate(cls, geometry: SensorGeometry,
                    parts: Iterable['EventStream']) -> 'EventStream':
        """Join streams end to end (no reordering)."""
        arrays = [part.array for part in parts]
        if not arrays:
            return cls(geometry)
        return cls(geometry, np.concatenate(arrays))

    @property
    def array(self) -> np.ndarray:
        """Read-only structured array view."""
        return self._events

    @property
    def t(self) -> np.ndarray:
        return self._events['t']

    @property
    def x(self) -> np.ndarray:
        return self._events['x']

    @property
    def y(self) -> np.ndarray:
        return self._events['y']

    @property
    def p(self) -> np.ndarray:
        return self._events['p']

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[Event]:
        for t, x, y, p in self._events.tolist():
            yield Event(t, x, y, p)

    def __getitem__(self, item: Union[int, slice]) -> Union[Event, 'EventStream']:
        if isinstance(item, slice):
            return EventStream(self.geometry, self._events[item])
        t, x, y, p = self._events[item].item()
        return Event(t, x, y, p)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return self.geometry == other.geometry and np.array_equal(self._events, other._events)

    def __repr__(self) -> str:
        return f"EventStream({self.geometry}, {len(self)} events)"

    def time_slice(self, t_start: Optional[int], t_end: int) -> 'EventStream':
        """
        Events with t_start < t <= t_end (from the first event if t_start is None).

        Requires a timestamp-sorted stream.
        """
        t = self.t
        if t_end < 0:
            return self[0:0]
        if t_start is None or t_start < 0:
            lo = 0
        else:
            lo = int(np.searchsorted(t, np.uint64(t_start), side='right'))
        hi = int(np.searchsorted(t, np.uint64(t_end), side='right'))
        return self[lo:max(lo, hi)]

    @property
    def first_t(self) -> Optional[int]:
        return int(self.t[0]) if len(self) else None

    @property
    def last_t(self) -> Optional[int]:
        return int(self.t[-1]) if len(self) else None

    @property
    def duration_us(self) -> int:
        """Span between first and last event, 0 for fewer than two events."""
        if len(self) < 2:
            return 0
        return int(self.t[-1]) - int(self.t[0])

    def mean_rate(self) -> float:
        """Mean event rate in events per second over the stream's span."""
        duration = self.duration_us
        if duration == 0:
            return 0.0
        return len(self) / (duration / 1e6)


@dataclass(frozen=True)
class Violation:
    """One problem found by validate_stream."""
    index: int
    kind: str  # 'monotonicity', 'bounds' or 'polarity'
    message: str


@dataclass
class ValidationReport:
    """Result of validate_stream."""
    count: int
    first_t: Optional[int]
    last_t: Optional[int]
    violations: List[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def by_kind(self, kind: str) -> List[Violation]:
        return [v for v in self.violations if v.kind == kind]


def validate_stream(stream: EventStream) -> ValidationReport:
    """
    Report every monotonicity, bounds and polarity violation in a stream.

    Violations are data, never exceptions; the list is sorted by index.
    """
    t, x, y, p = stream.t, stream.x, stream.y, stream.p
    geometry = stream.geometry
    violations: List[Violation] = []

    if len(stream) > 1:
        for i in (np.nonzero(t[1:] < t[:-1])[0] + 1).tolist():
            violations.append(Violation(
                i, 'monotonicity', f"t={int(t[i])} after t={int(t[i - 1])}"
            ))

    for i in np.nonzero((x >= geometry.width) | (y >= geometry.height))[0].tolist():
        violations.append(Violation(
            i, 'bounds', f"pixel ({int(x[i])}, {int(y[i])}) outside {geometry}"
        ))

    for i in np.nonzero((p != 1) & (p != -1))[0].tolist():
        violations.append(Violation(i, 'polarity', f"polarity {int(p[i])}"))

    violations.sort(key=lambda v: v.index)
    return ValidationReport(len(stream), stream.first_t, stream.last_t, violations)
