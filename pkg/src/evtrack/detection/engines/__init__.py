"""Detection engines."""

from evtrack.detection.engines.base import Detector
from evtrack.detection.engines.blob import BlobDetector
from evtrack.detection.engines.file import FileDetector

__all__ = ["Detector", "BlobDetector", "FileDetector"]
