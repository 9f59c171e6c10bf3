"""
Calibration file parser.

One `key = value` per line, '#' starts a comment:

    K1 = fx,0,cx, 0,fy,cy, 0,0,1     # frame camera intrinsics
    K2 = ...                          # event camera intrinsics
    R  = 9 numbers                    # or H = 9 numbers
    t  = 3 numbers                    # optional, default 0,0,0
    n  = 3 numbers                    # optional, default 0,0,1
    d  = 1 number                     # optional, default 1

Camera 1 is the frame camera, camera 2 the event camera. H (given or
composed from R, t, n, d) acts on normalized coordinates.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from loguru import logger

from evtrack.calibration.homography import (
    Homography,
    HomographyFactors,
    compose_homography,
    pixel_homography,
    rotational_approximation,
)
from evtrack.exceptions import CalibrationError
from evtrack.utils import parse_numbers

KEY_SIZES = {'K1': 9, 'K2': 9, 'H': 9, 'R': 9, 't': 3, 'n': 3, 'd': 1}
DIRECTIONS = ('frame2event', 'event2frame')


@dataclass
class Calibration:
    """Parsed calibration: intrinsics plus either a homography or its factors."""
    K1: np.ndarray
    K2: np.ndarray
    H: Optional[Homography] = None
    factors: Optional[HomographyFactors] = None

    def normalized_homography(self, rotational: bool = False) -> Homography:
        """Frame-to-event homography on normalized coordinates."""
        if self.H is not None:
            if rotational:
                logger.warning("calibration gives H directly; rotational approximation ignored")
            return self.H
        if rotational:
            return rotational_approximation(self.factors)
        return compose_homography(self.factors)

    def homography(self, direction: str = 'frame2event',
                   rotational: bool = False) -> Homography:
        """Pixel-domain homography for a warp direction."""
        if direction not in DIRECTIONS:
            raise CalibrationError(f"direction must be one of {DIRECTIONS}, got '{direction}'")
        h = pixel_homography(self.normalized_homography(rotational), self.K1, self.K2)
        return h if direction == 'frame2event' else h.inverse()


def parse_calibration(text: str, source: str = '<string>') -> Calibration:
    """
    Parse calibration text.

    Raises:
        CalibrationError: Unknown key, wrong number count, missing H/R, or both given
    """
    values: Dict[str, List[float]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key = key.strip()
        if not sep:
            raise CalibrationError(f"{source}: line {line_no}: expected 'key = value'")
        if key not in KEY_SIZES:
            raise CalibrationError(f"{source}: line {line_no}: unknown key '{key}'")
        if key in values:
            raise CalibrationError(f"{source}: line {line_no}: duplicate key '{key}'")
        try:
            numbers = parse_numbers(value)
        except ValueError:
            raise CalibrationError(f"{source}: line {line_no}: non-numeric value for '{key}'")
        if len(numbers) != KEY_SIZES[key]:
            raise CalibrationError(
                f"{source}: line {line_no}: '{key}' needs {KEY_SIZES[key]} numbers, "
                f"got {len(numbers)}"
            )
        values[key] = numbers

    if ('H' in values) == ('R' in values):
        raise CalibrationError(f"{source}: exactly one of 'H' or 'R' is required")

    K1 = np.array(values.get('K1', np.eye(3).ravel()), dtype=np.float64).reshape(3, 3)
    K2 = np.array(values.get('K2', np.eye(3).ravel()), dtype=np.float64).reshape(3, 3)

    if 'H' in values:
        extra = [k for k in ('t', 'n', 'd') if k in values]
        if extra:
            raise CalibrationError(f"{source}: {extra} only apply together with 'R'")
        return Calibration(K1, K2, H=Homography(np.reshape(values['H'], (3, 3))))

    factors = HomographyFactors(
        R=np.reshape(values['R'], (3, 3)),
        t=tuple(values.get('t', (0.0, 0.0, 0.0))),
        n=tuple(values.get('n', (0.0, 0.0, 1.0))),
        d=values.get('d', [1.0])[0],
    )
    return Calibration(K1, K2, factors=factors)


def load_calibration(path: Union[str, Path]) -> Calibration:
    """Read and parse a calibration file."""
    text = Path(path).read_text(encoding='utf-8')
    calib = parse_calibration(text, str(path))
    logger.debug("loaded calibration from {}", path)
    return calib
