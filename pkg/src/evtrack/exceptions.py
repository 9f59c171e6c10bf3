"""Exception hierarchy shared by every evtrack module."""

from typing import Optional


class EvtrackError(Exception):
    """Base class for all evtrack errors."""
    pass


class EventFormatError(EvtrackError, ValueError):
    """Raised when an event file does not conform to its declared format."""

    def __init__(self, message: str, index: Optional[int] = None):
        if index is not None:
            message = f"record {index}: {message}"
        super().__init__(message)
        self.index = index


class StreamOrderError(EvtrackError, ValueError):
    """Raised when timestamps go backwards (in a file, a surface or a tracker)."""

    def __init__(self, message: str, index: Optional[int] = None):
        if index is not None:
            message = f"record {index}: {message}"
        super().__init__(message)
        self.index = index


class GeometryError(EvtrackError, ValueError):
    """Raised for invalid sensor geometry or out-of-bounds pixel coordinates."""

    def __init__(self, message: str, index: Optional[int] = None):
        if index is not None:
            message = f"record {index}: {message}"
        super().__init__(message)
        self.index = index


class CalibrationError(EvtrackError, ValueError):
    """Raised for degenerate homographies and unreadable calibration files."""
    pass


class SyncError(EvtrackError, ValueError):
    """Raised when frames cannot be aligned with trigger timestamps."""
    pass


class DetectionFormatError(EvtrackError, ValueError):
    """Raised for malformed detection files."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CSVFormatError(EvtrackError, ValueError):
    """Raised for malformed track or ground-truth CSV files."""
    pass


class DetectorNotAvailableError(EvtrackError):
    """Raised when the requested detection engine cannot be constructed."""
    pass


class TrackingError(EvtrackError, ValueError):
    """Raised for invalid tracker input (time going backwards, non-finite boxes)."""
    pass


class SceneError(EvtrackError, ValueError):
    """Raised for invalid simulator scene configurations."""
    pass


class MetricsError(EvtrackError, ValueError):
    """Raised when a metric is undefined for its input."""
    pass


class ConfigError(EvtrackError, ValueError):
    """Raised for unknown keys or invalid values in pipeline configuration."""
    pass
