"""
Built-in connected-component detector.
"""

from typing import List

import numpy as np

from evtrack.detection.blobs import BlobParams, detect_blobs
from evtrack.detection.boxes import Detection
from evtrack.detection.engines.base import Detector


class BlobDetector(Detector):
    """Thresholded connected components of the max-combined snapshot."""

    def __init__(self, params: BlobParams = BlobParams()):
        self.params = params

    def detect(self, snapshot: np.ndarray, t: int) -> List[Detection]:
        return detect_blobs(snapshot, self.params, t)

    @property
    def name(self) -> str:
        return "blob"
