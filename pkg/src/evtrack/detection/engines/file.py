"""
Replay of externally produced detections (e.g. a CNN run offline).
"""

from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from loguru import logger

from evtrack.detection.boxes import Detection
from evtrack.detection.engines.base import Detector
from evtrack.formats.detections import DetectionMap, load_detections


class FileDetector(Detector):
    """Returns the detections a file lists for the snapshot timestamp; the snapshot is ignored."""

    def __init__(self, path: Optional[Union[str, Path]] = None,
                 detections: Optional[DetectionMap] = None):
        if detections is None:
            detections = load_detections(path)
        self.detections = detections

    def detect(self, snapshot: np.ndarray, t: int) -> List[Detection]:
        found = self.detections.get(int(t))
        if found is None:
            logger.debug("no detections listed for t={}", t)
            return []
        return list(found)

    @property
    def name(self) -> str:
        return "file"
