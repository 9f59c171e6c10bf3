"""
Detector base interface.

All detection engines must implement this contract.
"""

from abc import ABC, abstractmethod
from typing import List

import numpy as np

from evtrack.detection.boxes import Detection


class Detector(ABC):
    """Abstract base class for snapshot detectors."""

    @abstractmethod
    def detect(self, snapshot: np.ndarray, t: int) -> List[Detection]:
        """
        Detect agents in one snapshot.

        Args:
            snapshot: Snapshot pair, float array (2, H, W) with values in [0, 1]
            t: Snapshot timestamp in microseconds

        Returns:
            Detections at t
        """
        pass

    @property
    @abstractmethod
    def name(self) -> str:
        """Engine name for logging/debugging."""
        pass
