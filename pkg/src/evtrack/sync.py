"""
Frame/event temporal alignment through shared trigger timestamps.

Frame i was exposed at trigger_t[i] on the event-camera clock. Triggers are
data read from a file, never synthesized from a nominal frame rate.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from loguru import logger

from evtrack.events import EventStream
from evtrack.exceptions import SyncError


@dataclass(frozen=True)
class WindowPolicy:
    """
    Which events feed the snapshot of frame i.

    since_prev: t in (frame_time(i-1), frame_time(i)], from the stream start for i = 0
    half_open:  t in (frame_time(i) - duration_us, frame_time(i)]
    """
    kind: str = 'since_prev'
    duration_us: Optional[int] = None

    def __post_init__(self):
        if self.kind == 'since_prev':
            if self.duration_us is not None:
                raise SyncError("since_prev windows take no duration")
        elif self.kind == 'half_open':
            if self.duration_us is None or self.duration_us <= 0:
                raise SyncError(f"half_open windows need a positive duration, got {self.duration_us}")
        else:
            raise SyncError(f"Unknown window policy '{self.kind}'")

    @classmethod
    def parse(cls, text: str) -> 'WindowPolicy':
        """Parse 'since_prev' or 'half_open:<us>'."""
        text = text.strip()
        if text == 'since_prev':
            return cls()
        kind, _, value = text.partition(':')
        if kind != 'half_open' or not value:
            raise SyncError(f"Expected 'since_prev' or 'half_open:<us>', got '{text}'")
        try:
            return cls('half_open', int(value))
        except ValueError:
            raise SyncError(f"Window duration must be an integer, got '{value}'")

    def __str__(self) -> str:
        return self.kind if self.kind == 'since_prev' else f"half_open:{self.duration_us}"


@dataclass(frozen=True)
class FrameTimeline:
    """Trigger timestamps paired with frame indices."""
    trigger_t: Tuple[int, ...]
    frame_count: int

    @property
    def surplus(self) -> int:
        """Triggers with no frame."""
        return len(self.trigger_t) - self.frame_count

    @property
    def frame_times(self) -> Tuple[int, ...]:
        return self.trigger_t[:self.frame_count]


def register_triggers(trigger_t: Sequence[int], frame_count: int) -> FrameTimeline:
    """
    Pair frame i with trigger_t[i].

    Raises:
        SyncError: Non-increasing triggers or fewer triggers than frames
    """
    triggers = tuple(int(t) for t in trigger_t)
    if frame_count < 0:
        raise SyncError(f"frame count must be non-negative, got {frame_count}")
    for i in range(1, len(triggers)):
        if triggers[i] <= triggers[i - 1]:
            raise SyncError(
                f"trigger {i} at t={triggers[i]} not after t={triggers[i - 1]}"
            )
    if len(triggers) < frame_count:
        raise SyncError(f"{len(triggers)} triggers cannot align {frame_count} frames")

    timeline = FrameTimeline(triggers, frame_count)
    if timeline.surplus:
        logger.warning("{} surplus trigger(s) ignored", timeline.surplus)
    return timeline


def frame_time(tl: FrameTimeline, i: int) -> int:
    """Timestamp of frame i."""
    if not 0 <= i < tl.frame_count:
        raise SyncError(f"frame index {i} out of range [0, {tl.frame_count})")
    return tl.trigger_t[i]


def events_for_frame(stream: EventStream, tl: FrameTimeline, i: int,
                     window: Optional[WindowPolicy] = None) -> EventStream:
    """Events assigned to frame i under a window policy, in stream order."""
    window = window or WindowPolicy()
    t_end = frame_time(tl, i)
    if window.kind == 'since_prev':
        t_start = None if i == 0 else frame_time(tl, i - 1)
    else:
        t_start = t_end - window.duration_us
    return stream.time_slice(t_start, t_end)


def read_triggers(path: Union[str, Path]) -> List[int]:
    """Read a trigger file: one decimal microsecond timestamp per line."""
    triggers = []
    with open(path, 'r', encoding='ascii') as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            try:
                value = int(line)
            except ValueError:
                raise SyncError(f"{path}: line {line_no}: not an integer timestamp: '{line}'")
            if value < 0:
                raise SyncError(f"{path}: line {line_no}: negative timestamp {value}")
            triggers.append(value)
    logger.debug("read {} triggers from {}", len(triggers), path)
    return triggers


def write_triggers(triggers: Sequence[int], path: Union[str, Path]) -> None:
    """Write a trigger file."""
    with open(path, 'w', encoding='ascii') as fh:
        for t in triggers:
            fh.write(f"{int(t)}\n")
