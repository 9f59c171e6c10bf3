"""
CSV handlers for tracker output and simulator ground truth.

Track CSV:        t_us,track_id,x1,y1,w,h,status
Ground-truth CSV: t_us,agent_id,x1,y1,x2,y2
"""

import csv
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Union

from loguru import logger

from evtrack.detection.boxes import BBox
from evtrack.exceptions import CSVFormatError
from evtrack.tracking.kalman import TrackStatus
from evtrack.tracking.sort import TrackedBox

TRACK_HEADER = ['t_us', 'track_id', 'x1', 'y1', 'w', 'h', 'status']
GT_HEADER = ['t_us', 'agent_id', 'x1', 'y1', 'x2', 'y2']


class GroundTruthBox(NamedTuple):
    agent_id: int
    box: BBox


GroundTruth = Dict[int, List[GroundTruthBox]]


def _check_header(reader, expected: List[str], path) -> None:
    header = next(reader, None)
    if header != expected:
        raise CSVFormatError(f"{path}: expected header {','.join(expected)}, got {header}")


def write_tracks(tracks: Iterable[TrackedBox], sink: Union[str, Path]) -> int:
    """
    Write tracker output sorted by (t_us, track_id).

    Returns:
        Number of rows written
    """
    rows = sorted(tracks, key=lambda b: (b.t, b.id))
    with open(sink, 'w', newline='', encoding='ascii') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(TRACK_HEADER)
        for b in rows:
            writer.writerow([
                b.t, b.id,
                f"{b.box.x1:.3f}", f"{b.box.y1:.3f}",
                f"{b.box.width:.3f}", f"{b.box.height:.3f}",
                b.status.value,
            ])
    logger.debug("wrote {} track rows to {}", len(rows), sink)
    return len(rows)


def read_tracks(source: Union[str, Path]) -> List[TrackedBox]:
    """Read a track CSV."""
    out = []
    with open(source, 'r', newline='', encoding='ascii') as fh:
        reader = csv.reader(fh)
        _check_header(reader, TRACK_HEADER, source)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t, track_id = int(row[0]), int(row[1])
                x1, y1, w, h = (float(v) for v in row[2:6])
                status = TrackStatus(row[6])
                box = BBox.from_xywh(x1, y1, w, h)
            except (ValueError, IndexError) as e:
                raise CSVFormatError(f"{source}: line {line_no}: {e}")
            out.append(TrackedBox(track_id, box, t, status))
    return out


def write_ground_truth(gt: GroundTruth, sink: Union[str, Path]) -> None:
    """Write ground truth sorted by (t_us, agent_id)."""
    with open(sink, 'w', newline='', encoding='ascii') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(GT_HEADER)
        for t in sorted(gt):
            for agent_id, box in sorted(gt[t], key=lambda g: g.agent_id):
                writer.writerow([t, agent_id, f"{box.x1:.3f}", f"{box.y1:.3f}",
                                 f"{box.x2:.3f}", f"{box.y2:.3f}"])


def read_ground_truth(source: Union[str, Path]) -> GroundTruth:
    """Read a ground-truth CSV, grouped by timestamp (ascending)."""
    grouped: GroundTruth = {}
    with open(source, 'r', newline='', encoding='ascii') as fh:
        reader = csv.reader(fh)
        _check_header(reader, GT_HEADER, source)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t, agent_id = int(row[0]), int(row[1])
                box = BBox(*(float(v) for v in row[2:6]))
                if len(row) != 6:
                    raise ValueError(f"expected 6 fields, got {len(row)}")
            except (ValueError, TypeError) as e:
                raise CSVFormatError(f"{source}: line {line_no}: {e}")
            grouped.setdefault(t, []).append(GroundTruthBox(agent_id, box))
    return {t: grouped[t] for t in sorted(grouped)}
