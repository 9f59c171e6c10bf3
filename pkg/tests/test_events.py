"""
Tests for the event data model and stream validation.
"""

import numpy as np
import pytest

from evtrack.events import (
    EVENT_DTYPE,
    Event,
    EventStream,
    SensorGeometry,
    validate_stream,
)
from evtrack.exceptions import GeometryError


GEOMETRY = SensorGeometry(64, 48)


def make_stream(rows, geometry=GEOMETRY):
    return EventStream.from_events(geometry, [Event(*r) for r in rows])


class TestSensorGeometry:
    """Test sensor geometry."""

    def test_contains(self):
        """Pixels on the sensor are inside, the far edges are not."""
        assert GEOMETRY.contains(0, 0)
        assert GEOMETRY.contains(63, 47)
        assert not GEOMETRY.contains(64, 0)
        assert not GEOMETRY.contains(0, 48)
        assert not GEOMETRY.contains(-1, 3)

    def test_invalid(self):
        """Zero or over-16-bit sizes are rejected."""
        with pytest.raises(GeometryError):
            SensorGeometry(0, 10)
        with pytest.raises(GeometryError):
            SensorGeometry(70000, 10)

    def test_str(self):
        assert str(GEOMETRY) == "64x48"


class TestEventStream:
    """Test EventStream construction, slicing and statistics."""

    def test_from_events(self):
        """Events come back in the order given."""
        stream = make_stream([(10, 1, 2, 1), (20, 3, 4, -1)])
        assert len(stream) == 2
        assert list(stream) == [Event(10, 1, 2, 1), Event(20, 3, 4, -1)]
        assert stream[1] == Event(20, 3, 4, -1)

    def test_from_arrays(self):
        """Column arrays build the same stream as event tuples."""
        a = EventStream.from_arrays(GEOMETRY, [1, 2], [3, 4], [5, 6], [1, -1])
        b = make_stream([(1, 3, 5, 1), (2, 4, 6, -1)])
        assert a == b

    def test_empty(self):
        """An empty stream has no span and no rate."""
        stream = EventStream(GEOMETRY)
        assert len(stream) == 0
        assert stream.first_t is None
        assert stream.last_t is None
        assert stream.duration_us == 0
        assert stream.mean_rate() == 0.0

    def test_read_only(self):
        """The backing array cannot be modified."""
        stream = make_stream([(1, 1, 1, 1)])
        with pytest.raises(ValueError):
            stream.array['t'][0] = 5

    def test_caller_array_is_copied(self):
        """Mutating the source array afterwards does not change the stream."""
        events = np.zeros(2, dtype=EVENT_DTYPE)
        events['p'] = 1
        stream = EventStream(GEOMETRY, events)
        events['t'][0] = 99
        assert stream[0].t == 0

    def test_slice(self):
        """Slicing returns a stream on the same sensor."""
        stream = make_stream([(t, 0, 0, 1) for t in range(10)])
        part = stream[2:5]
        assert isinstance(part, EventStream)
        assert part.geometry == GEOMETRY
        assert [e.t for e in part] == [2, 3, 4]

    def test_time_slice(self):
        """time_slice keeps t_start < t <= t_end."""
        stream = make_stream([(t, 0, 0, 1) for t in (0, 5, 5, 10, 15)])
        assert [e.t for e in stream.time_slice(5, 15)] == [10, 15]
        assert [e.t for e in stream.time_slice(None, 5)] == [0, 5, 5]
        assert len(stream.time_slice(15, 100)) == 0
        assert len(stream.time_slice(None, -1)) == 0

    def test_concatenate(self):
        """Parts are joined without reordering."""
        a = make_stream([(1, 0, 0, 1)])
        b = make_stream([(2, 0, 0, -1)])
        joined = EventStream.concatenate(GEOMETRY, [a, b])
        assert [e.t for e in joined] == [1, 2]
        assert len(EventStream.concatenate(GEOMETRY, [])) == 0

    def test_mean_rate(self):
        """6.75 M events over 10 s is 675 000 events/s."""
        n = 6_750_001
        t = np.linspace(0, 10_000_000, n).astype(np.uint64)
        events = np.zeros(n, dtype=EVENT_DTYPE)
        events['t'] = t
        events['p'] = 1
        stream = EventStream(GEOMETRY, events)
        assert stream.duration_us == 10_000_000
        assert f"{stream.mean_rate():.0f}" == "675000"

    def test_equality(self):
        a = make_stream([(1, 2, 3, 1)])
        assert a == make_stream([(1, 2, 3, 1)])
        assert a != make_stream([(1, 2, 3, -1)])
        assert a != make_stream([(1, 2, 3, 1)], SensorGeometry(10, 10))


class TestValidateStream:
    """Test the validation pass."""

    def test_valid(self):
        report = validate_stream(make_stream([(1, 0, 0, 1), (1, 1, 1, -1), (2, 63, 47, 1)]))
        assert report.valid
        assert report.count == 3
        assert report.first_t == 1
        assert report.last_t == 2

    def test_reports_every_violation(self):
        """All violations are listed, in index order, and nothing raises."""
        stream = make_stream([
            (10, 0, 0, 1),
            (5, 0, 0, 1),     # backwards
            (6, 64, 0, 1),    # outside
            (7, 0, 0, 0),     # zero polarity
            (3, 0, 99, -1),   # backwards and outside
        ])
        report = validate_stream(stream)
        assert not report.valid
        assert [v.index for v in report.by_kind('monotonicity')] == [1, 4]
        assert [v.index for v in report.by_kind('bounds')] == [2, 4]
        assert [v.index for v in report.by_kind('polarity')] == [3]
        indices = [v.index for v in report.violations]
        assert indices == sorted(indices)

    @pytest.mark.parametrize("k", [0, 1, 5, 40])
    def test_injected_swaps(self, k):
        """k separated swaps in a sorted stream give exactly k monotonicity violations."""
        rng = np.random.default_rng(100 + k)
        n = 1000
        t = np.cumsum(rng.integers(1, 50, n))
        starts = 2 * rng.choice(n // 2, size=k, replace=False)
        for i in starts:
            t[i], t[i + 1] = t[i + 1], t[i]
        stream = EventStream.from_arrays(
            GEOMETRY, t,
            rng.integers(0, GEOMETRY.width, n),
            rng.integers(0, GEOMETRY.height, n),
            rng.choice([-1, 1], n),
        )
        report = validate_stream(stream)
        assert len(report.violations) == k
        found = sorted(v.index for v in report.by_kind('monotonicity'))
        assert found == sorted(int(i) + 1 for i in starts)

    def test_equal_timestamps_allowed(self):
        """Ties are not ordering violations."""
        report = validate_stream(make_stream([(5, 0, 0, 1), (5, 1, 0, 1)]))
        assert report.valid
