"""
File format handlers: event files, detections, tracks and ground truth, images.
"""

from evtrack.formats.events import EventReader, iter_event_chunks, read_events, write_events
from evtrack.formats.images import PGMHandler, PNGHandler

__all__ = ["EventReader", "iter_event_chunks", "read_events", "write_events",
           "PGMHandler", "PNGHandler"]
