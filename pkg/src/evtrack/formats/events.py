"""
Event file handlers: the "EVT1" binary format and the t,x,y,p CSV format.

Binary layout (little-endian):
    header, 16 bytes: magic "EVTS", u16 version (1), u16 width, u16 height, 6 zero bytes
    record, 16 bytes: u64 t, u16 x, u16 y, i8 p, 3 zero bytes
"""

import io
import struct
from pathlib import Path
from typing import BinaryIO, Iterator, Optional, Union

import numpy as np
from loguru import logger

from evtrack.events import EVENT_DTYPE, EventStream, SensorGeometry
from evtrack.exceptions import EventFormatError, GeometryError, StreamOrderError
from evtrack.utils import detect_event_format

Source = Union[str, Path, BinaryIO]

MAGIC = b'EVTS'
VERSION = 1
HEADER = struct.Struct('<4sHHH6x')
# reserved header bytes, and per-record pad bytes, must be zero
HEADER_RESERVED = slice(10, 16)
RECORD_PAD = slice(13, 16)
RECORD_DTYPE = np.dtype({
    'names': ['t', 'x', 'y', 'p'],
    'formats': ['<u8', '<u2', '<u2', 'i1'],
    'offsets': [0, 8, 10, 12],
    'itemsize': 16,
})
CSV_HEADER = 't,x,y,p'
DEFAULT_CHUNK = 1 << 16


class _ChunkChecker:
    """Carries ordering state across chunk boundaries."""

    def __init__(self, geometry: SensorGeometry, check: bool):
        self.geometry = geometry
        self.check = check
        self.offset = 0
        self.last_t: Optional[int] = None

    def __call__(self, events: np.ndarray) -> None:
        p = events['p']
        bad = np.nonzero((p != 1) & (p != -1))[0]
        if bad.size:
            i = int(bad[0])
            raise EventFormatError(f"invalid polarity {int(p[i])}", self.offset + i)

        if self.check and events.size:
            t = events['t']
            if self.last_t is not None and int(t[0]) < self.last_t:
                raise StreamOrderError(
                    f"timestamp {int(t[0])} before {self.last_t}", self.offset
                )
            back = np.nonzero(t[1:] < t[:-1])[0]
            if back.size:
                i = int(back[0]) + 1
                raise StreamOrderError(
                    f"timestamp {int(t[i])} before {int(t[i - 1])}", self.offset + i
                )
            outside = np.nonzero(
                (events['x'] >= self.geometry.width) | (events['y'] >= self.geometry.height)
            )[0]
            if outside.size:
                i = int(outside[0])
                raise GeometryError(
                    f"pixel ({int(events['x'][i])}, {int(events['y'][i])}) "
                    f"outside {self.geometry}",
                    self.offset + i,
                )

        if events.size:
            self.last_t = int(events['t'][-1])
        self.offset += events.size


class EventReader:
    """
    Lazy reader over an event file.

    Iterating yields EventStream chunks of at most chunk_size events, so memory
    stays bounded regardless of file size. Use as a context manager when the
    reader opened the file itself.
    """

    def __init__(self, source: Source, format: Optional[str] = None,
                 geometry: Optional[SensorGeometry] = None,
                 chunk_size: int = DEFAULT_CHUNK, check: bool = True):
        if format is None:
            if not isinstance(source, (str, Path)):
                raise ValueError("format must be given when reading from a file object")
            format = detect_event_format(source)
        if format not in ('binary', 'csv'):
            raise ValueError(f"Unknown event format: {format}")

        self.format = format
        self.chunk_size = max(1, chunk_size)
        self._owns = isinstance(source, (str, Path))
        self._fh: BinaryIO = open(source, 'rb') if self._owns else source
        self._name = str(source) if self._owns else '<stream>'

        try:
            if format == 'binary':
                self.geometry = self._read_header()
            else:
                if geometry is None:
                    raise GeometryError("CSV event files need an explicit sensor geometry")
                self.geometry = geometry
                self._read_csv_header()
        except Exception:
            self.close()
            raise

        self._checker = _ChunkChecker(self.geometry, check)
        logger.debug("opened {} ({}, {})", self._name, format, self.geometry)

    def _read_header(self) -> SensorGeometry:
        raw = self._fh.read(HEADER.size)
        if len(raw) < HEADER.size:
            raise EventFormatError(f"header truncated ({len(raw)} of {HEADER.size} bytes)")
        magic, version, width, height = HEADER.unpack(raw)
        if magic != MAGIC:
            raise EventFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise EventFormatError(f"unsupported version {version}")
        if any(raw[HEADER_RESERVED]):
            raise EventFormatError("reserved header bytes are not zero")
        try:
            return SensorGeometry(width, height)
        except GeometryError as e:
            raise EventFormatError(f"bad header geometry: {e}")

    def _read_csv_header(self) -> None:
        line = self._fh.readline().decode('ascii', errors='replace').strip()
        if line != CSV_HEADER:
            raise EventFormatError(f"expected CSV header '{CSV_HEADER}', got '{line}'")

    def __iter__(self) -> Iterator[EventStream]:
        chunks = self._binary_chunks() if self.format == 'binary' else self._csv_chunks()
        for events in chunks:
            self._checker(events)
            events.flags.writeable = False
            yield EventStream(self.geometry, events)
        logger.debug("read {} events from {}", self._checker.offset, self._name)

    def _binary_chunks(self) -> Iterator[np.ndarray]:
        record_size = RECORD_DTYPE.itemsize
        while True:
            raw = self._fh.read(self.chunk_size * record_size)
            if not raw:
                return
            full, partial = divmod(len(raw), record_size)
            if partial:
                more = self._fh.read(record_size - partial)
                raw += more
                full, partial = divmod(len(raw), record_size)
                if partial:
                    raise EventFormatError(
                        f"truncated record ({partial} of {record_size} bytes)",
                        self._checker.offset + full,
                    )
            pad = np.frombuffer(raw, dtype=np.uint8, count=full * record_size)
            dirty = np.nonzero(pad.reshape(full, record_size)[:, RECORD_PAD].any(axis=1))[0]
            if dirty.size:
                raise EventFormatError(
                    "record pad bytes are not zero", self._checker.offset + int(dirty[0])
                )
            records = np.frombuffer(raw, dtype=RECORD_DTYPE, count=full)
            events = np.empty(full, dtype=EVENT_DTYPE)
            for name in ('t', 'x', 'y', 'p'):
                events[name] = records[name]
            yield events

    def _csv_chunks(self) -> Iterator[np.ndarray]:
        rows = []
        index = self._checker.offset
        line_no = 1
        for raw in self._fh:
            line_no += 1
            line = raw.decode('ascii', errors='replace').strip()
            if not line:
                continue
            parts = line.split(',')
            if len(parts) != 4:
                raise EventFormatError(f"line {line_no}: expected 4 fields, got {len(parts)}",
                                       index)
            try:
                t, x, y, p = (int(v) for v in parts)
            except ValueError:
                raise EventFormatError(f"line {line_no}: non-integer field in '{line}'", index)
            if t < 0 or t > 0xFFFFFFFFFFFFFFFF:
                raise EventFormatError(f"line {line_no}: timestamp {t} out of range", index)
            if not (0 <= x <= 0xFFFF and 0 <= y <= 0xFFFF):
                raise GeometryError(f"line {line_no}: pixel ({x}, {y}) not 16-bit", index)
            if p not in (-1, 1):
                raise EventFormatError(f"line {line_no}: invalid polarity {p}", index)
            rows.append((t, x, y, p))
            index += 1
            if len(rows) >= self.chunk_size:
                yield np.array(rows, dtype=EVENT_DTYPE)
                rows = []
        if rows:
            yield np.array(rows, dtype=EVENT_DTYPE)

    def close(self) -> None:
        if self._owns:
            self._fh.close()

    def __enter__(self) -> 'EventReader':
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def iter_event_chunks(source: Source, format: Optional[str] = None,
                      geometry: Optional[SensorGeometry] = None,
                      chunk_size: int = DEFAULT_CHUNK,
                      check: bool = True) -> Iterator[EventStream]:
    """
    Yield bounded-size EventStream chunks from an event file, in file order.

    Args:
        source: File path or binary file object
        format: 'binary' or 'csv' (detected from the suffix when None)
        geometry: Sensor geometry, required for CSV
        chunk_size: Maximum events per chunk
        check: Raise on non-monotonic timestamps and out-of-bounds pixels

    Raises:
        EventFormatError: Malformed header, truncated record, bad field
        StreamOrderError: Timestamp going backwards (check=True)
        GeometryError: Pixel outside the sensor (check=True)
    """
    with EventReader(source, format, geometry, chunk_size, check) as reader:
        yield from reader


def read_events(source: Source, format: Optional[str] = None,
                geometry: Optional[SensorGeometry] = None,
                check: bool = True,
                chunk_size: int = DEFAULT_CHUNK) -> EventStream:
    """
    Read a whole event file into one EventStream.

    See iter_event_chunks for arguments and errors.
    """
    with EventReader(source, format, geometry, chunk_size, check) as reader:
        return EventStream.concatenate(reader.geometry, list(reader))


def write_events(stream: EventStream, sink: Union[str, Path, BinaryIO],
                 format: Optional[str] = None,
                 chunk_size: int = DEFAULT_CHUNK) -> int:
    """
    Write a stream to an event file.

    Args:
        stream: Events to write
        sink: File path or binary file object
        format: 'binary' or 'csv' (detected from the suffix when None)
        chunk_size: Events encoded per write call

    Returns:
        Number of bytes written
    """
    if format is None:
        if not isinstance(sink, (str, Path)):
            raise ValueError("format must be given when writing to a file object")
        format = detect_event_format(sink)

    if isinstance(sink, (str, Path)):
        with open(sink, 'wb') as fh:
            written = _write(stream, fh, format, chunk_size)
        logger.debug("wrote {} events ({} bytes) to {}", len(stream), written, sink)
        return written
    return _write(stream, sink, format, chunk_size)


def _write(stream: EventStream, fh: BinaryIO, format: str, chunk_size: int) -> int:
    events = stream.array
    written = 0

    if format == 'binary':
        geometry = stream.geometry
        written += fh.write(HEADER.pack(MAGIC, VERSION, geometry.width, geometry.height))
        for start in range(0, len(events), chunk_size):
            part = events[start:start + chunk_size]
            records = np.zeros(len(part), dtype=RECORD_DTYPE)
            for name in ('t', 'x', 'y', 'p'):
                records[name] = part[name]
            written += fh.write(records.tobytes())
        return written

    if format == 'csv':
        written += fh.write((CSV_HEADER + '\n').encode('ascii'))
        for start in range(0, len(events), chunk_size):
            part = events[start:start + chunk_size]
            buf = io.StringIO()
            for t, x, y, p in part.tolist():
                buf.write(f"{t},{x},{y},{p}\n")
            written += fh.write(buf.getvalue().encode('ascii'))
        return written

    raise ValueError(f"Unknown event format: {format}")
