"""
Utility functions for format detection, parsing and small numeric helpers.
"""

import math
import re
from pathlib import Path
from typing import List, Tuple, Union

from evtrack.exceptions import EventFormatError


# Supported event file extensions
BINARY_EVENT_FORMATS = {'.evt', '.bin', '.evt1'}
CSV_EVENT_FORMATS = {'.csv', '.txt'}
ALL_EVENT_FORMATS = BINARY_EVENT_FORMATS | CSV_EVENT_FORMATS


def detect_event_format(path: Union[str, Path]) -> str:
    """
    Detect the event file format from its extension.

    Args:
        path: File path

    Returns:
        'binary' or 'csv'

    Raises:
        EventFormatError: If the extension is not a known event format
    """
    ext = Path(path).suffix.lower()
    if ext in BINARY_EVENT_FORMATS:
        return 'binary'
    if ext in CSV_EVENT_FORMATS:
        return 'csv'
    raise EventFormatError(f"Unsupported event file extension: '{ext}' ({path})")


def parse_numbers(text: str) -> List[float]:
    """Parse a comma- or whitespace-separated list of numbers."""
    return [float(v) for v in re.split(r'[\s,]+', text.strip()) if v]


def parse_size(text: str) -> Tuple[int, int]:
    """
    Parse a sensor size such as '1280x720' or '1280,720'.

    Raises:
        ValueError: If the text is not two positive integers
    """
    parts = [p for p in re.split(r'[x,\s]+', text.strip().lower()) if p]
    if len(parts) != 2:
        raise ValueError(f"Expected WIDTHxHEIGHT, got '{text}'")
    width, height = int(parts[0]), int(parts[1])
    if width < 1 or height < 1:
        raise ValueError(f"Sensor size must be positive, got '{text}'")
    return width, height


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves up."""
    return int(math.floor(value + 0.5))
