"""
Ellipse geometry for simulated agents.

Pixel (x, y) covers [x, x+1) x [y, y+1); the inside test uses its centre
(x + 0.5, y + 0.5).
"""

import math
from typing import Tuple

import numpy as np

from evtrack.detection.boxes import BBox

# Speeds below this (px/s) leave the heading at the agent's default.
STILL_SPEED = 1e-9


def heading(vx: float, vy: float, default: float) -> float:
    """Orientation aligned to velocity."""
    if math.hypot(vx, vy) <= STILL_SPEED:
        return default
    return math.atan2(vy, vx)


def half_extents(a: float, b: float, theta: float) -> Tuple[float, float]:
    """Half width and half height of the tight box around a rotated ellipse."""
    c, s = math.cos(theta), math.sin(theta)
    hx = math.sqrt((a * c) ** 2 + (b * s) ** 2)
    hy = math.sqrt((a * s) ** 2 + (b * c) ** 2)
    return hx, hy


def ellipse_box(cx: float, cy: float, a: float, b: float, theta: float) -> BBox:
    """Tight axis-aligned bounds of a rotated ellipse."""
    hx, hy = half_extents(a, b, theta)
    return BBox(cx - hx, cy - hy, cx + hx, cy + hy)


def ellipse_footprint(cx: float, cy: float, a: float, b: float, theta: float,
                      width: int, height: int) -> Tuple[slice, slice, np.ndarray]:
    """
    Raster footprint of a rotated ellipse.

    Returns:
        (rows, cols, mask): a window of the sensor and the boolean mask of
        pixels whose centres fall inside the ellipse; empty window when the
        ellipse misses the sensor
    """
    hx, hy = half_extents(a, b, theta)
    x0 = max(0, int(math.floor(cx - hx)))
    x1 = min(width, int(math.ceil(cx + hx)) + 1)
    y0 = max(0, int(math.floor(cy - hy)))
    y1 = min(height, int(math.ceil(cy + hy)) + 1)
    if x0 >= x1 or y0 >= y1:
        return slice(0, 0), slice(0, 0), np.zeros((0, 0), dtype=bool)

    dx = np.arange(x0, x1, dtype=np.float64) + 0.5 - cx
    dy = np.arange(y0, y1, dtype=np.float64)[:, None] + 0.5 - cy
    c, s = math.cos(theta), math.sin(theta)
    u = dx * c + dy * s
    v = -dx * s + dy * c
    mask = (u / a) ** 2 + (v / b) ** 2 <= 1.0
    return slice(y0, y1), slice(x0, x1), mask
