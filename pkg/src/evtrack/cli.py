"""
Command-line interface for evtrack.

Subcommands map one-to-one onto the file-level stages in evtrack.core:

    simulate  scene -> events, ground truth, triggers, frames
    render    events -> time-surface images
    detect    events + triggers -> detection file
    track     events + triggers (or detections) -> track CSV
    eval      tracks + ground truth (+ detections) -> JSON report
    warp      events + calibration -> warped events
    info      events -> counts, span, rate, validation, throughput

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal error.
"""

import argparse
import json
import sys
from dataclasses import replace
from typing import List, Optional

from loguru import logger

from evtrack import __version__, core
from evtrack.calibration.calibfile import DIRECTIONS
from evtrack.config import PipelineConfig, load_config
from evtrack.events import SensorGeometry
from evtrack.exceptions import ConfigError, DetectorNotAvailableError, EvtrackError
from evtrack.simulator.scene import load_scene
from evtrack.sync import WindowPolicy
from evtrack.utils import parse_size

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

DEFAULTS = PipelineConfig()


class HelpFormatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    """Show defaults, except for flags whose default comes from the config file."""

    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors exiting 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sensor(text: str) -> SensorGeometry:
    try:
        return SensorGeometry(*parse_size(text))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _window(text: str) -> WindowPolicy:
    try:
        return WindowPolicy.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _add_sensor(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        '--sensor',
        type=_sensor,
        metavar='WxH',
        help='Sensor size, required for CSV event files (e.g. 128x128)'
    )


def _add_surface(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        '--tau',
        type=float,
        metavar='US',
        help=f'Time-surface decay constant in microseconds (config surface.tau_us, '
             f'default: {DEFAULTS.surface.tau_us:g})'
    )


def _add_detection(parser: argparse.ArgumentParser) -> None:
    d = DEFAULTS.detection
    parser.add_argument(
        '--threshold',
        type=float,
        help=f'Blob intensity threshold (config detection.threshold, default: {d.threshold})'
    )
    parser.add_argument(
        '--min-area',
        type=int,
        metavar='PX',
        help=f'Smallest blob kept, in pixels (config detection.min_area, default: {d.min_area})'
    )
    parser.add_argument(
        '--connectivity',
        type=int,
        choices=[4, 8],
        help=f'Pixel connectivity (config detection.connectivity, default: {d.connectivity})'
    )
    parser.add_argument(
        '--window',
        type=_window,
        metavar='POLICY',
        help="Events per snapshot: since_prev or half_open:<us> "
             f"(config sync.window, default: {DEFAULTS.sync.window})"
    )
    parser.add_argument(
        '--frames',
        type=int,
        metavar='N',
        help='Number of frames to align (default: one per trigger)'
    )


def _add_tracker(parser: argparse.ArgumentParser) -> None:
    tr = DEFAULTS.tracker
    parser.add_argument(
        '--iou-threshold',
        type=float,
        help=f'Minimum IoU for a match (config tracker.iou_threshold, default: {tr.iou_threshold})'
    )
    parser.add_argument(
        '--max-age',
        type=int,
        help=f'Missed snapshots before a track is deleted (config tracker.max_age, '
             f'default: {tr.max_age})'
    )
    parser.add_argument(
        '--min-hits',
        type=int,
        help=f'Consecutive hits to confirm a track (config tracker.min_hits, '
             f'default: {tr.min_hits})'
    )
    parser.add_argument(
        '--emit-tentative',
        action='store_true',
        default=None,
        help='Also write tentative tracks (config tracker.emit_tentative, default: false)'
    )


def build_parser() -> argparse.ArgumentParser:
    """The evtrack argument parser."""
    parser = ArgumentParser(
        prog='evtrack',
        description='Event-camera multi-animal tracking: time surfaces, blob detection, '
                    'SORT tracking, metrics and a synthetic event simulator.',
        epilog='Examples:\n'
               '  evtrack simulate --scene fish3 --out-events e.evt --out-gt gt.csv '
               '--out-triggers trig.txt\n'
               '  evtrack track e.evt --triggers trig.txt --out tracks.csv\n'
               '  evtrack eval tracks.csv gt.csv --pretty\n'
               '  evtrack info --synthetic 10000000 --bench\n',
        formatter_class=HelpFormatter
    )
    parser.add_argument(
        '--config',
        metavar='FILE',
        help='YAML pipeline configuration; flags override it'
    )
    parser.add_argument(
        '--seed',
        type=int,
        help=f'Random seed (config seed, default: {DEFAULTS.seed})'
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument(
        '-v', '--verbose',
        action='store_true',
        help='Debug logging'
    )
    verbosity.add_argument(
        '-q', '--quiet',
        action='store_true',
        help='Warnings and errors only'
    )
    parser.add_argument(
        '--version',
        action='version',
        version=f'evtrack {__version__}'
    )
    sub = parser.add_subparsers(dest='command', metavar='COMMAND', required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, description=help_text,
                              formatter_class=HelpFormatter)

    p = command('simulate', 'Simulate a scene into events, ground truth and triggers')
    p.add_argument(
        '--scene',
        metavar='FILE',
        help='Scene YAML file or stock scene fish1..fish6 (config scene)'
    )
    p.add_argument('--out-events', required=True, metavar='FILE',
                   help='Event file to write (.evt binary or .csv)')
    p.add_argument('--out-gt', metavar='FILE', help='Ground-truth CSV to write')
    p.add_argument('--out-triggers', metavar='FILE', help='Trigger file to write')
    p.add_argument('--out-frames', metavar='DIR', help='Directory for PGM frames')
    p.add_argument('--speed-scale', type=float, metavar='X',
                   help='Multiply every trajectory frequency (default: from scene)')
    p.add_argument('--progress', action='store_true', help='Show a progress bar')

    p = command('render', 'Render time-surface snapshots as PGM (and PNG)')
    p.add_argument('events', help='Event file')
    p.add_argument('--out-dir', required=True, metavar='DIR', help='Output directory')
    p.add_argument('--at', type=int, action='append', metavar='US',
                   help='Query time in microseconds (repeatable)')
    p.add_argument('--every', type=int, metavar='US',
                   help='Render every US microseconds over the stream')
    p.add_argument('--triggers', metavar='FILE', help='Render at every trigger timestamp')
    p.add_argument('--png', action='store_true', help='Also write a false-colour PNG')
    _add_surface(p)
    _add_sensor(p)

    p = command('detect', 'Detect blobs at every trigger and write a detection file')
    p.add_argument('events', help='Event file')
    p.add_argument('--triggers', required=True, metavar='FILE', help='Trigger file')
    p.add_argument('--out', required=True, metavar='FILE', help='Detection file (JSON lines)')
    p.add_argument('--progress', action='store_true', help='Show a progress bar')
    _add_surface(p)
    _add_detection(p)
    _add_sensor(p)

    p = command('track', 'Track agents and write a track CSV')
    p.add_argument('events', help='Event file')
    p.add_argument('--triggers', required=True, metavar='FILE', help='Trigger file')
    p.add_argument('--out', required=True, metavar='FILE', help='Track CSV to write')
    p.add_argument('--detections', metavar='FILE',
                   help='Replay this detection file instead of detecting blobs')
    p.add_argument('--engine', choices=['auto', 'blob', 'file'], default='auto',
                   help='Detector: auto (file when --detections is given, else blob)')
    p.add_argument('--progress', action='store_true', help='Show a progress bar')
    _add_surface(p)
    _add_detection(p)
    _add_tracker(p)
    _add_sensor(p)

    p = command('eval', 'Evaluate tracks (and detections) against ground truth')
    p.add_argument('tracks', help='Track CSV')
    p.add_argument('gt', help='Ground-truth CSV')
    p.add_argument('--detections', metavar='FILE', help='Detection file for AP / mAP')
    p.add_argument('--pretty', action='store_true', help='Print a table instead of JSON')

    p = command('warp', 'Warp events through the calibrated homography')
    p.add_argument('events', help='Event file')
    p.add_argument('--calib', metavar='FILE', help='Calibration file (config calib)')
    p.add_argument('--out', required=True, metavar='FILE', help='Warped event file')
    p.add_argument('--direction', choices=DIRECTIONS, default='frame2event',
                   help='Mapping direction')
    p.add_argument('--rotational', action='store_true',
                   help='Use the rotation-only approximation of H')
    p.add_argument('--target-sensor', type=_sensor, metavar='WxH',
                   help='Target sensor size (default: source sensor)')
    _add_sensor(p)

    p = command('info', 'Report event count, span, rate and validation')
    p.add_argument('events', nargs='?', help='Event file')
    p.add_argument('--bench', action='store_true',
                   help='Measure time-surface ingestion throughput')
    p.add_argument('--synthetic', type=int, metavar='N',
                   help='Use N random events instead of a file')
    _add_sensor(p)

    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = 'DEBUG' if args.verbose else 'WARNING' if args.quiet else 'INFO'
    logger.remove()
    logger.add(sys.stderr, level=level, format="<level>{level: <8}</level> {message}")
    logger.enable('evtrack')


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """Overlay command-line flags on the config file (or the defaults)."""
    config = load_config(args.config)

    def pick(**flags):
        return {k: v for k, v in flags.items() if v is not None}

    surface = pick(tau_us=getattr(args, 'tau', None))
    detection = pick(
        threshold=getattr(args, 'threshold', None),
        min_area=getattr(args, 'min_area', None),
        connectivity=getattr(args, 'connectivity', None),
    )
    tracker = pick(
        iou_threshold=getattr(args, 'iou_threshold', None),
        max_age=getattr(args, 'max_age', None),
        min_hits=getattr(args, 'min_hits', None),
        emit_tentative=getattr(args, 'emit_tentative', None),
    )
    window = getattr(args, 'window', None)
    sync = {} if window is None else {'window': window.kind, 'window_us': window.duration_us}
    top = pick(
        seed=args.seed,
        scene=getattr(args, 'scene', None),
        calib=getattr(args, 'calib', None),
    )
    return replace(
        config,
        surface=replace(config.surface, **surface),
        detection=replace(config.detection, **detection),
        tracker=replace(config.tracker, **tracker),
        sync=replace(config.sync, **sync),
        **top,
    ).validate()


def _simulate(args, config: PipelineConfig) -> None:
    if config.scene is None:
        raise ConfigError("simulate needs --scene or a 'scene' entry in the config file")
    with core.stage('scene'):
        scene = load_scene(config.scene, seed=config.seed)
        if args.speed_scale is not None:
            scene = scene.with_speed_scale(args.speed_scale)
    result = core.simulate_to_files(scene, args.out_events, args.out_gt,
                                    args.out_triggers, args.out_frames, args.progress)
    logger.info("wrote {} events to {}", len(result.stream), args.out_events)


def _render(args, config: PipelineConfig) -> None:
    times = list(args.at or [])
    if args.triggers:
        with core.stage('sync'):
            times.extend(core.read_triggers(args.triggers))
    if args.every:
        with core.stage('read'):
            stream = core.read_events(args.events, geometry=args.sensor)
        times.extend(core.render_times(stream, args.every))
    if not times:
        raise ConfigError("render needs --at, --every or --triggers")
    core.render_files(args.events, args.out_dir, sorted(set(times)),
                      config.surface.build(), args.png, args.sensor)


def _detect(args, config: PipelineConfig) -> None:
    core.detect_files(args.events, args.triggers, args.out, config,
                      args.sensor, args.frames, args.progress)


def _track(args, config: PipelineConfig) -> None:
    core.track_files(args.events, args.triggers, args.out, config,
                     detections_path=args.detections, engine=args.engine,
                     geometry=args.sensor, frame_count=args.frames,
                     progress=args.progress)


def _eval(args, config: PipelineConfig) -> None:
    report = core.evaluate_files(args.tracks, args.gt, args.detections)
    if args.pretty:
        print(report.format_table())
    else:
        print(json.dumps(report.to_dict(), indent=2))


def _warp(args, config: PipelineConfig) -> None:
    if config.calib is None:
        raise ConfigError("warp needs --calib or a 'calib' entry in the config file")
    core.warp_file(args.events, config.calib, args.out, args.direction,
                   args.rotational, args.target_sensor, args.sensor)


def _info(args, config: PipelineConfig) -> None:
    if args.synthetic is not None:
        if args.synthetic < 1:
            raise ConfigError("--synthetic needs a positive event count")
        stream = core.synthetic_stream(args.synthetic, args.sensor or SensorGeometry(1280, 720),
                                       seed=config.seed)
    elif args.events is None:
        raise ConfigError("info needs an event file or --synthetic N")
    else:
        info = core.stream_info(args.events, args.sensor)
        print(info.format())
        if not args.bench:
            return
        with core.stage('read'):
            stream = core.read_events(args.events, geometry=args.sensor)

    if args.bench:
        with core.stage('surface'):
            rate = core.benchmark_surface(stream)
        print(f"surface throughput: {rate:.0f} events/s")
    else:
        print(f"events:     {len(stream)}")
        print(f"event rate: {stream.mean_rate():.0f} events/s")


COMMANDS = {
    'simulate': _simulate,
    'render': _render,
    'detect': _detect,
    'track': _track,
    'eval': _eval,
    'warp': _warp,
    'info': _info,
}


def _report(stage_name: str, error: BaseException, with_type: bool = False) -> None:
    prefix = f"evtrack: {stage_name}: "
    message = f"{type(error).__name__}: {error}" if with_type else str(error)
    print(prefix + message, file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    _configure_logging(args)
    try:
        with core.stage('config'):
            config = resolve_config(args)
        COMMANDS[args.command](args, config)
    except (ConfigError, DetectorNotAvailableError) as e:
        _report(getattr(e, 'stage', args.command), e)
        return EXIT_USAGE
    except (EvtrackError, OSError) as e:
        _report(getattr(e, 'stage', args.command), e)
        return EXIT_DATA
    except Exception as e:
        _report(getattr(e, 'stage', args.command), e, with_type=True)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
