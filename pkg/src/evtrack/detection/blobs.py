"""
Connected-component blob detection on decayed time surfaces.
"""

from dataclasses import dataclass
from typing import List

import numpy as np
from scipy import ndimage

from evtrack.detection.boxes import BBox, Detection


@dataclass(frozen=True)
class BlobParams:
    """Binarization threshold, minimum component area and pixel connectivity."""
    threshold: float = 0.35
    min_area: int = 15
    connectivity: int = 8

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")
        if self.min_area < 1:
            raise ValueError(f"min_area must be >= 1, got {self.min_area}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")


def combine_channels(img: np.ndarray) -> np.ndarray:
    """Per-pixel max over polarity channels; a 2-D image passes through."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim == 3:
        return img.max(axis=0)
    raise ValueError(f"Expected (H, W) or (C, H, W) intensities, got shape {img.shape}")


def detect_blobs(img: np.ndarray, params: BlobParams = BlobParams(), t: int = 0) -> List[Detection]:
    """
    Find one box per connected component of the thresholded image.

    Args:
        img: Intensities in [0, 1], shape (2, H, W) for a snapshot pair or (H, W)
        params: Detection parameters
        t: Snapshot timestamp attached to the detections

    Returns:
        Detections with tight boxes (exclusive upper edges), scored by mean
        component intensity, sorted by descending score then (y1, x1)
    """
    combined = combine_channels(img)
    mask = combined >= params.threshold
    if not mask.any():
        return []

    structure = ndimage.generate_binary_structure(2, 1 if params.connectivity == 4 else 2)
    labels, count = ndimage.label(mask, structure=structure)
    flat = labels.ravel()
    areas = np.bincount(flat, minlength=count + 1)
    sums = np.bincount(flat, weights=combined.ravel(), minlength=count + 1)

    detections = []
    for label, slices in enumerate(ndimage.find_objects(labels), start=1):
        if slices is None or areas[label] < params.min_area:
            continue
        rows, cols = slices
        score = min(1.0, max(0.0, sums[label] / areas[label]))
        box = BBox(float(cols.start), float(rows.start), float(cols.stop), float(rows.stop))
        detections.append(Detection(box, score, t))

    detections.sort(key=lambda d: (-d.score, d.box.y1, d.box.x1))
    return detections
