"""
Detection: boxes, the blob detector and pluggable detection engines.
"""

from evtrack.detection.boxes import BBox, Detection, iou
from evtrack.detection.blobs import BlobParams, detect_blobs
from evtrack.detection.dispatch import make_detector

__all__ = ["BBox", "Detection", "iou", "BlobParams", "detect_blobs", "make_detector"]
