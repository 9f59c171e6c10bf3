"""
Detection file handler (JSON lines), one snapshot per line:

    {"t": 8333, "boxes": [{"x1": 10.0, "y1": 12.0, "x2": 22.0, "y2": 18.0, "score": 0.93}]}
"""

import json
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, TextIO, Tuple, Union

from loguru import logger

from evtrack.detection.boxes import BBox, Detection
from evtrack.exceptions import DetectionFormatError

DetectionMap = Dict[int, List[Detection]]
BOX_KEYS = ('x1', 'y1', 'x2', 'y2', 'score')


def _parse_line(line: str, line_no: int) -> Tuple[int, List[Detection]]:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise DetectionFormatError(f"invalid JSON ({e.msg})", line_no)
    if not isinstance(record, dict) or 't' not in record or 'boxes' not in record:
        raise DetectionFormatError("expected an object with 't' and 'boxes'", line_no)

    t = record['t']
    if isinstance(t, bool) or not isinstance(t, int) or t < 0:
        raise DetectionFormatError(f"'t' must be a non-negative integer, got {t!r}", line_no)
    if not isinstance(record['boxes'], list):
        raise DetectionFormatError("'boxes' must be a list", line_no)

    detections = []
    for k, raw in enumerate(record['boxes']):
        if not isinstance(raw, dict) or any(key not in raw for key in BOX_KEYS):
            raise DetectionFormatError(f"box {k} needs keys {', '.join(BOX_KEYS)}", line_no)
        try:
            x1, y1, x2, y2, score = (float(raw[key]) for key in BOX_KEYS)
        except (TypeError, ValueError):
            raise DetectionFormatError(f"box {k} has non-numeric fields", line_no)
        if not 0.0 <= score <= 1.0:
            raise DetectionFormatError(f"box {k} score {score} outside [0, 1]", line_no)
        if x2 < x1 or y2 < y1:
            raise DetectionFormatError(f"box {k} corners out of order", line_no)
        try:
            detections.append(Detection(BBox(x1, y1, x2, y2), score, t))
        except ValueError as e:
            raise DetectionFormatError(f"box {k}: {e}", line_no)
    return t, detections


def read_detections(fh: TextIO) -> DetectionMap:
    """Parse detection lines from an open text file."""
    grouped: DetectionMap = {}
    for line_no, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        t, detections = _parse_line(line, line_no)
        grouped.setdefault(t, []).extend(detections)
    return {t: grouped[t] for t in sorted(grouped)}


def load_detections(source: Union[str, Path]) -> DetectionMap:
    """
    Load a detection file, grouped by timestamp with timestamps ascending.

    Lines sharing a timestamp are merged in file order.

    Raises:
        DetectionFormatError: Malformed line (with its line number), score
            outside [0, 1], or x2 < x1
    """
    with open(source, 'r', encoding='utf-8') as fh:
        grouped = read_detections(fh)
    logger.debug("loaded {} snapshots of detections from {}", len(grouped), source)
    return grouped


def write_detections(detections: Mapping[int, Sequence[Detection]],
                     sink: Union[str, Path]) -> None:
    """Write detections as JSON lines, timestamps ascending, box order kept."""
    with open(sink, 'w', encoding='utf-8') as fh:
        for t in sorted(detections):
            boxes = [
                {'x1': float(d.box.x1), 'y1': float(d.box.y1),
                 'x2': float(d.box.x2), 'y2': float(d.box.y2), 'score': float(d.score)}
                for d in detections[t]
            ]
            fh.write(json.dumps({'t': int(t), 'boxes': boxes}) + '\n')
