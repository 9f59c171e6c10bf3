"""
Core module - file-level pipeline stages.

Each function here reads its inputs from files, runs one stage and writes its
outputs, so stages can be chained or swapped for external tools. The CLI is a
thin layer over these functions.
"""

import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
from loguru import logger
from tqdm import tqdm

from evtrack.calibration.calibfile import load_calibration
from evtrack.calibration.homography import WarpResult, warp_events
from evtrack.config import PipelineConfig
from evtrack.detection.boxes import Detection
from evtrack.detection.dispatch import make_detector
from evtrack.events import (
    EVENT_DTYPE,
    EventStream,
    SensorGeometry,
    ValidationReport,
    validate_stream,
)
from evtrack.formats.detections import load_detections, write_detections
from evtrack.formats.events import read_events, write_events
from evtrack.formats.images import PGMHandler, PNGHandler
from evtrack.formats.tracks import read_ground_truth, read_tracks, write_ground_truth, write_tracks
from evtrack.metrics import EvalReport, evaluate
from evtrack.simulator.emulator import SimulationResult, render_frames, simulate
from evtrack.simulator.scene import SceneConfig
from evtrack.sync import (
    FrameTimeline,
    WindowPolicy,
    events_for_frame,
    frame_time,
    read_triggers,
    register_triggers,
    write_triggers,
)
from evtrack.timesurface import DecayParams, TimeSurface, false_color, to_uint8
from evtrack.tracking.sort import TrackedBox, Tracker

PathLike = Union[str, Path]


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag any exception escaping the block with the pipeline stage name."""
    try:
        yield
    except Exception as e:
        if not hasattr(e, 'stage'):
            e.stage = name
        raise


def simulate_to_files(scene: SceneConfig, out_events: PathLike,
                      out_gt: Optional[PathLike] = None,
                      out_triggers: Optional[PathLike] = None,
                      out_frames: Optional[PathLike] = None,
                      progress: bool = False) -> SimulationResult:
    """
    Simulate a scene and write events, ground truth, triggers and frames.

    Frames go to out_frames/frame_00000.pgm, one per trigger.
    """
    with stage('simulate'):
        result = simulate(scene, progress=progress)
    with stage('write'):
        write_events(result.stream, out_events)
        if out_gt is not None:
            write_ground_truth(result.ground_truth, out_gt)
        if out_triggers is not None:
            write_triggers(result.triggers, out_triggers)
        if out_frames is not None:
            frames_dir = Path(out_frames)
            frames_dir.mkdir(parents=True, exist_ok=True)
            for k, frame in enumerate(render_frames(scene)):
                PGMHandler.write(frames_dir / f"frame_{k:05d}.pgm", frame)
    return result


def iter_snapshots(stream: EventStream, timeline: FrameTimeline, decay: DecayParams,
                   window: WindowPolicy = WindowPolicy(),
                   progress: bool = False) -> Iterator[tuple]:
    """
    Yield (t, snapshot pair) at every frame time.

    since_prev windows partition the stream, so one surface accumulates all
    history. half_open windows overlap; the surface is rebuilt from each
    window's events alone.
    """
    surface = TimeSurface(stream.geometry)
    frames = range(timeline.frame_count)
    for i in tqdm(frames, desc="snapshots", unit="frame", disable=not progress):
        t = frame_time(timeline, i)
        events = events_for_frame(stream, timeline, i, window)
        with stage('surface'):
            if window.kind == 'half_open':
                surface.reset()
            surface.update_many(events)
            pair = surface.snapshot_pair(t, decay)
        yield t, pair


def _load_stream(events_path: PathLike, geometry: Optional[SensorGeometry]) -> EventStream:
    with stage('read'):
        stream = read_events(events_path, geometry=geometry)
    logger.info("read {} events from {}", len(stream), events_path)
    return stream


def _load_timeline(triggers_path: PathLike, frame_count: Optional[int]) -> FrameTimeline:
    with stage('sync'):
        triggers = read_triggers(triggers_path)
        return register_triggers(triggers, len(triggers) if frame_count is None else frame_count)


def detect_files(events_path: PathLike, triggers_path: PathLike, out_detections: PathLike,
                 config: PipelineConfig = PipelineConfig(),
                 geometry: Optional[SensorGeometry] = None,
                 frame_count: Optional[int] = None,
                 progress: bool = False) -> Dict[int, List[Detection]]:
    """Run the blob detector at every frame time and write a detection file."""
    stream = _load_stream(events_path, geometry)
    timeline = _load_timeline(triggers_path, frame_count)
    detector = make_detector("blob", params=config.detection.build())

    detections: Dict[int, List[Detection]] = {}
    snapshots = iter_snapshots(stream, timeline, config.surface.build(),
                               config.sync.build(), progress)
    for t, pair in snapshots:
        with stage('detect'):
            detections[t] = detector.detect(pair, t)
    with stage('write'):
        write_detections(detections, out_detections)
    logger.info("detected {} boxes over {} frames",
                sum(len(d) for d in detections.values()), len(detections))
    return detections


def track_files(events_path: Optional[PathLike], triggers_path: PathLike, out_tracks: PathLike,
                config: PipelineConfig = PipelineConfig(),
                detections_path: Optional[PathLike] = None,
                engine: str = "auto",
                geometry: Optional[SensorGeometry] = None,
                frame_count: Optional[int] = None,
                progress: bool = False) -> List[TrackedBox]:
    """
    Track agents: window events per frame, render the snapshot pair, detect,
    step the tracker and write the track CSV.

    With a detection file the events are not needed; the tracker output then
    depends on the detections only.
    """
    timeline = _load_timeline(triggers_path, frame_count)
    with stage('detect'):
        detector = make_detector(engine, detections_path, config.detection.build())
    tracker = Tracker(config.tracker.build())

    if detector.name == "file":
        frames = ((frame_time(timeline, i), None) for i in range(timeline.frame_count))
    else:
        if events_path is None:
            raise ValueError("tracking with the blob detector needs an event file")
        stream = _load_stream(events_path, geometry)
        frames = iter_snapshots(stream, timeline, config.surface.build(),
                                config.sync.build(), progress)

    rows: List[TrackedBox] = []
    for t, pair in frames:
        with stage('detect'):
            dets = detector.detect(pair, t)
        with stage('track'):
            rows.extend(tracker.step(dets, t))

    with stage('write'):
        write_tracks(rows, out_tracks)
    logger.info("{} confirmed track(s), {} rows written to {}",
                len({r.id for r in rows}), len(rows), out_tracks)
    return rows


def render_times(stream: EventStream, every_us: int) -> List[int]:
    """Query times every_us apart from the first to the last event."""
    if len(stream) == 0:
        return []
    return list(range(stream.first_t + every_us, stream.last_t + every_us, every_us))


def render_files(events_path: PathLike, out_dir: PathLike, times: Sequence[int],
                 decay: DecayParams = DecayParams(),
                 png: bool = False,
                 geometry: Optional[SensorGeometry] = None) -> List[Path]:
    """
    Render surface_{t}_neg.pgm / surface_{t}_pos.pgm (and surface_{t}.png with
    png=True) at each query time.

    Returns:
        Paths written
    """
    stream = _load_stream(events_path, geometry)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    surface = TimeSurface(stream.geometry)
    written: List[Path] = []
    previous: Optional[int] = None
    for t in sorted(int(t) for t in times):
        with stage('surface'):
            surface.update_many(stream.time_slice(previous, t))
            pair = surface.snapshot_pair(t, decay)
        previous = t
        with stage('write'):
            for name, channel in (('neg', 0), ('pos', 1)):
                path = out_dir / f"surface_{t}_{name}.pgm"
                PGMHandler.write(path, to_uint8(pair[channel]))
                written.append(path)
            if png:
                path = out_dir / f"surface_{t}.png"
                PNGHandler.write(path, false_color(pair))
                written.append(path)
    logger.info("rendered {} snapshot(s) to {}", len(times), out_dir)
    return written


def evaluate_files(tracks_path: PathLike, gt_path: PathLike,
                   detections_path: Optional[PathLike] = None) -> EvalReport:
    """Evaluate a track CSV (and optionally a detection file) against ground truth."""
    with stage('read'):
        tracks = read_tracks(tracks_path)
        gt = read_ground_truth(gt_path)
        detections = load_detections(detections_path) if detections_path else None
    with stage('eval'):
        return evaluate(tracks, gt, detections)


def warp_file(events_path: PathLike, calib_path: PathLike, out_path: PathLike,
              direction: str = 'frame2event', rotational: bool = False,
              target: Optional[SensorGeometry] = None,
              geometry: Optional[SensorGeometry] = None) -> WarpResult:
    """Warp an event file into the other camera's pixel grid."""
    stream = _load_stream(events_path, geometry)
    with stage('calib'):
        h = load_calibration(calib_path).homography(direction, rotational)
        result = warp_events(h, stream, target or stream.geometry)
    with stage('write'):
        write_events(result.stream, out_path)
    logger.info("warped {} events, dropped {}", len(result.stream), result.dropped)
    return result


@dataclass
class StreamInfo:
    """Summary statistics of an event file."""
    geometry: SensorGeometry
    count: int
    first_t: Optional[int]
    last_t: Optional[int]
    duration_s: float
    rate: float
    positive: int
    negative: int
    validation: ValidationReport

    def format(self) -> str:
        lines = [
            f"sensor:     {self.geometry}",
            f"events:     {self.count} ({self.positive} positive, {self.negative} negative)",
            f"time span:  {self.first_t} .. {self.last_t} us ({self.duration_s:.3f} s)",
            f"event rate: {self.rate:.0f} events/s",
        ]
        if self.validation.valid:
            lines.append("validation: ok")
        else:
            lines.append(f"validation: {len(self.validation.violations)} violation(s)")
            for v in self.validation.violations[:10]:
                lines.append(f"  record {v.index}: {v.kind}: {v.message}")
        return "\n".join(lines)


def stream_info(events_path: PathLike, geometry: Optional[SensorGeometry] = None) -> StreamInfo:
    """Read a stream without checks and report counts, span, rate and violations."""
    with stage('read'):
        stream = read_events(events_path, geometry=geometry, check=False)
    positive = int(np.count_nonzero(stream.p > 0))
    return StreamInfo(
        geometry=stream.geometry,
        count=len(stream),
        first_t=stream.first_t,
        last_t=stream.last_t,
        duration_s=stream.duration_us / 1e6,
        rate=stream.mean_rate(),
        positive=positive,
        negative=len(stream) - positive,
        validation=validate_stream(stream),
    )


def synthetic_stream(count: int, geometry: SensorGeometry = SensorGeometry(1280, 720),
                     rate: float = 675_000.0, seed: int = 0) -> EventStream:
    """Random time-ordered events at a given mean rate."""
    rng = np.random.default_rng(seed)
    events = np.empty(count, dtype=EVENT_DTYPE)
    span = max(1, int(count / rate * 1e6))
    events['t'] = np.sort(rng.integers(0, span, count, dtype=np.uint64))
    events['x'] = rng.integers(0, geometry.width, count)
    events['y'] = rng.integers(0, geometry.height, count)
    events['p'] = rng.choice(np.array([-1, 1], dtype=np.int8), count)
    return EventStream(geometry, events)


def benchmark_surface(stream: EventStream, chunk_size: int = 1 << 16,
                      clock: Callable[[], float] = time.perf_counter) -> float:
    """
    Time-surface ingestion throughput in events per second (single thread).

    The stream is fed in chunks, the way the readers deliver it.
    """
    surface = TimeSurface(stream.geometry)
    start = clock()
    for lo in range(0, len(stream), chunk_size):
        surface.update_many(stream[lo:lo + chunk_size])
    elapsed = clock() - start
    rate = len(stream) / elapsed if elapsed > 0 else float('inf')
    logger.info("ingested {} events in {:.3f} s ({:.0f} events/s)", len(stream), elapsed, rate)
    return rate
