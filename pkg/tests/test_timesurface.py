"""
Tests for time surfaces.
"""

import math

import numpy as np
import pytest

from evtrack.events import Event, EventStream, SensorGeometry
from evtrack.exceptions import EventFormatError, GeometryError, StreamOrderError
from evtrack.timesurface import (
    MAX_TIMESTAMP,
    NEVER,
    DecayParams,
    TimeSurface,
    false_color,
    snapshot_pair,
    to_uint8,
    update,
)


GEOMETRY = SensorGeometry(64, 64)
TAU = DecayParams(50_000)


def random_stream(n, seed, span=2_000_000):
    rng = np.random.default_rng(seed)
    return EventStream.from_arrays(
        GEOMETRY,
        np.sort(rng.integers(0, span, n)),
        rng.integers(0, GEOMETRY.width, n),
        rng.integers(0, GEOMETRY.height, n),
        rng.choice([-1, 1], n),
    )


def rescan(stream, t_query, params, p):
    """Recompute a decayed channel from every event up to t_query."""
    latest = np.full((GEOMETRY.height, GEOMETRY.width), NEVER, dtype=np.int64)
    mask = (stream.t <= t_query) & (stream.p == p)
    np.maximum.at(latest, (stream.y[mask].astype(np.int64), stream.x[mask].astype(np.int64)),
                  stream.t[mask].astype(np.int64))
    out = np.zeros(latest.shape)
    seen = latest != NEVER
    out[seen] = np.exp(-(t_query - latest[seen]) / params.tau_us)
    return out


class TestTimeSurface:
    """Test ingestion and rendering."""

    def test_untouched_is_black(self):
        """Cells that never fired render as exactly 0."""
        surface = TimeSurface(GEOMETRY)
        pair = surface.snapshot_pair(1000, TAU)
        assert pair.shape == (2, 64, 64)
        assert not pair.any()

    def test_single_event(self):
        """A fresh event renders as 1, and decays as exp(-age / tau)."""
        surface = TimeSurface(GEOMETRY)
        surface.update(Event(1000, 3, 4, 1))
        assert surface.decayed_image(1000, TAU, 1)[4, 3] == 1.0
        assert surface.decayed_image(51_000, TAU, 1)[4, 3] == pytest.approx(math.exp(-1))
        assert surface.decayed_image(51_000, TAU, -1)[4, 3] == 0.0
        assert surface.timestamp(3, 4, 1) == 1000
        assert surface.timestamp(3, 4, -1) is None

    def test_latest_event_wins(self):
        surface = TimeSurface(GEOMETRY)
        surface.update(Event(10, 0, 0, -1))
        surface.update(Event(20, 0, 0, -1))
        assert surface.timestamp(0, 0, -1) == 20

    def test_values_in_unit_interval(self):
        surface = TimeSurface(GEOMETRY)
        surface.update_many(random_stream(2000, 5))
        pair = surface.snapshot_pair(3_000_000, TAU)
        assert pair.min() >= 0.0
        assert pair.max() <= 1.0

    def test_rescan_oracle(self):
        """Incremental rendering matches a full rescan at random query times."""
        stream = random_stream(10_000, 42)
        rng = np.random.default_rng(7)
        queries = np.sort(rng.integers(0, 2_100_000, 50))
        surface = TimeSurface(GEOMETRY)
        previous = None
        for q in queries.tolist():
            surface.update_many(stream.time_slice(previous, q))
            previous = q
            for p in (-1, 1):
                expected = rescan(stream, q, TAU, p)
                got = surface.decayed_image(q, TAU, p)
                assert np.max(np.abs(got - expected)) <= 1e-12

    def test_update_many_matches_update(self):
        """Batch ingestion gives the same grid as per-event updates."""
        stream = random_stream(3000, 11)
        one, many = TimeSurface(GEOMETRY), TimeSurface(GEOMETRY)
        for e in stream:
            update(one, e)
        many.update_many(stream)
        assert one == many

    def test_update_many_with_ties(self):
        """Events sharing a timestamp at one cell keep the last one's time."""
        stream = EventStream.from_events(GEOMETRY, [
            Event(5, 1, 1, 1), Event(5, 1, 1, 1), Event(6, 1, 1, 1), Event(6, 2, 2, -1),
        ])
        surface = TimeSurface(GEOMETRY)
        surface.update_many(stream)
        assert surface.timestamp(1, 1, 1) == 6
        assert surface.timestamp(2, 2, -1) == 6
        assert surface.last_ingested_t == 6

    def test_query_before_last_event(self):
        surface = TimeSurface(GEOMETRY)
        surface.update(Event(100, 0, 0, 1))
        with pytest.raises(StreamOrderError):
            surface.decayed_image(99, TAU, 1)

    def test_out_of_order_update(self):
        surface = TimeSurface(GEOMETRY)
        surface.update(Event(100, 0, 0, 1))
        with pytest.raises(StreamOrderError):
            surface.update(Event(99, 0, 0, 1))

    def test_out_of_bounds(self):
        surface = TimeSurface(GEOMETRY)
        with pytest.raises(GeometryError):
            surface.update(Event(1, 64, 0, 1))

    def test_rejected_batch_leaves_surface_untouched(self):
        """A batch with a bad record writes nothing."""
        surface = TimeSurface(GEOMETRY)
        stream = EventStream.from_events(GEOMETRY, [Event(1, 0, 0, 1), Event(2, 70, 0, 1)])
        with pytest.raises(GeometryError) as exc:
            surface.update_many(stream)
        assert exc.value.index == 1
        assert surface == TimeSurface(GEOMETRY)

    def test_largest_timestamp(self):
        surface = TimeSurface(GEOMETRY)
        surface.update(Event(MAX_TIMESTAMP, 2, 3, 1))
        assert surface.timestamp(2, 3, 1) == MAX_TIMESTAMP
        assert surface.decayed_image(MAX_TIMESTAMP, TAU, 1)[3, 2] == 1.0

    def test_timestamp_beyond_int64(self):
        """u64 timestamps the int64 grid cannot hold are rejected, not wrapped."""
        surface = TimeSurface(GEOMETRY)
        with pytest.raises(EventFormatError):
            surface.update(Event(2**63, 0, 0, 1))
        stream = EventStream.from_events(GEOMETRY, [Event(1, 0, 0, 1), Event(2**64 - 1, 1, 1, 1)])
        with pytest.raises(EventFormatError) as exc:
            surface.update_many(stream)
        assert exc.value.index == 1
        assert surface == TimeSurface(GEOMETRY)

    def test_reset(self):
        surface = TimeSurface(GEOMETRY)
        surface.update(Event(100, 0, 0, 1))
        surface.reset()
        assert surface.last_ingested_t == 0
        assert not snapshot_pair(surface, 0, TAU).any()

    def test_grid_is_read_only(self):
        surface = TimeSurface(GEOMETRY)
        with pytest.raises(ValueError):
            surface.grid[0, 0, 0] = 5

    def test_invalid_tau(self):
        with pytest.raises(ValueError):
            DecayParams(0)


class TestImages:
    """Test quantization and false colour."""

    def test_to_uint8(self):
        values = np.array([[0.0, 1.0, 0.5, 0.2]])
        assert to_uint8(values).tolist() == [[0, 255, 128, 51]]

    def test_false_color(self):
        """Negative goes to red, positive to blue."""
        pair = np.zeros((2, 2, 3))
        pair[0, 0, 0] = 1.0
        pair[1, 1, 2] = 1.0
        rgb = false_color(pair)
        assert rgb.shape == (2, 3, 3)
        assert rgb[0, 0].tolist() == [255, 0, 0]
        assert rgb[1, 2].tolist() == [0, 0, 255]
        assert rgb[0, 1].tolist() == [0, 0, 0]
