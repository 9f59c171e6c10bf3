"""
Bounding boxes and detections.

Boxes are corner boxes (x1, y1, x2, y2) in pixels. When a box comes from a
raster (a connected component), x2 and y2 are exclusive edges, so a single
pixel at (x, y) is the box (x, y, x + 1, y + 1).
"""

import math
from dataclasses import dataclass
from typing import Tuple


@dataclass(frozen=True)
class BBox:
    """Axis-aligned corner box."""
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x1, self.y1, self.x2, self.y2)):
            raise ValueError(f"Box has non-finite coordinates: {self}")
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"Box corners out of order: {self}")

    @classmethod
    def from_xywh(cls, x1: float, y1: float, w: float, h: float) -> 'BBox':
        return cls(x1, y1, x1 + w, y1 + h)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0

    def shifted(self, dx: float, dy: float) -> 'BBox':
        """Translate by (dx, dy)."""
        return BBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return self.x1, self.y1, self.x2, self.y2


@dataclass(frozen=True)
class Detection:
    """A scored box found in the snapshot at time t."""
    box: BBox
    score: float
    t: int

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"Detection score must be in [0, 1], got {self.score}")


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 when the union is empty."""
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union
