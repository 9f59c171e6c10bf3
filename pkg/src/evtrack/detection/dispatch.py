"""
Central detector dispatcher.

Manages engine selection.
"""

from pathlib import Path
from typing import Literal, Optional, Union

from loguru import logger

from evtrack.detection.blobs import BlobParams
from evtrack.detection.engines.base import Detector
from evtrack.exceptions import DetectorNotAvailableError

EngineType = Literal["auto", "blob", "file"]


def make_detector(
    engine: EngineType = "auto",
    detections_path: Optional[Union[str, Path]] = None,
    params: Optional[BlobParams] = None,
) -> Detector:
    """
    Build a detector.

    Args:
        engine: Detection engine to use:
            - "auto": replay detections_path when given, else blob (default)
            - "blob": built-in connected-component detector
            - "file": replay detections_path (required)
        detections_path: Detection file (JSON lines)
        params: Blob parameters

    Raises:
        DetectorNotAvailableError: If "file" is requested without a path
    """
    if engine == "auto":
        engine = "file" if detections_path is not None else "blob"

    if engine == "blob":
        from evtrack.detection.engines.blob import BlobDetector
        detector = BlobDetector(params or BlobParams())
    elif engine == "file":
        if detections_path is None:
            raise DetectorNotAvailableError("file detector needs a detection file (--detections)")
        from evtrack.detection.engines.file import FileDetector
        detector = FileDetector(detections_path)
    else:
        raise ValueError(f"Invalid engine '{engine}'. Must be 'auto', 'blob', or 'file'")

    logger.debug("using {} detector", detector.name)
    return detector
