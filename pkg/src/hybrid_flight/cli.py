"""Command-line entry points: ``simulate``, ``analyze`` and ``bench``.

Exit codes: 0 on success, 2 on bad input (config, log or usage errors),
3 on any other failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .analysis import (
    build_report,
    load_bridge_stats,
    load_mission_log,
    load_resource_log,
    load_vision_log,
    write_histogram_csv,
    write_report,
)
from .bench import run_bench
from .config import load_mission_config
from .exceptions import HybridFlightException
from .settings import app_settings
from .simulation import run_mission
from .utils import TRANSPORT_ALIASES, resolve_transport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_INTERNAL = 3

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger("hybrid_flight")
    root.handlers[:] = [handler]
    root.setLevel(level.upper())


def _window(values: Optional[List[float]]):
    return None if values is None else (values[0], values[1])


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_mission_config(args.config)
    output_dir = Path(args.output_dir) if args.output_dir else config.output_dir
    result = run_mission(config, output_dir)
    stats = result.bridge_stats["dispatcher"]
    print(
        f"wrote {output_dir}: vision={len(result.vision_samples)} "
        f"mission={len(result.mission_entries)} resource={len(result.resource_samples)} "
        f"commands={stats['succeeded']}/{stats['sent']}"
    )
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    vision = load_vision_log(args.vision)
    mission = load_mission_log(args.mission) if args.mission else None
    resources = load_resource_log(args.resource) if args.resource else None
    bridge_stats = load_bridge_stats(args.bridge_stats) if args.bridge_stats else None

    report = build_report(
        vision,
        mission=mission,
        resources=resources,
        bridge_stats=bridge_stats,
        active_window=_window(args.active_window),
        circular_yaw=args.circular_yaw,
    )
    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    write_report(report, report_path)
    write_histogram_csv(report.histogram, report_path.parent / "latency_hist.csv")
    print(report.summary_line())
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    if args.frames < 1:
        print("bench: --frames must be at least 1", file=sys.stderr)
        return EXIT_BAD_INPUT
    if args.rate <= 0:
        print("bench: --rate must be positive", file=sys.stderr)
        return EXIT_BAD_INPUT
    transport_cls = resolve_transport(args.transport) if args.transport else app_settings.TRANSPORT_CLASS
    result = run_bench(transport_cls, args.frames, args.rate)
    for line in result.lines():
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybrid-flight",
        description="Simulate, analyze and benchmark a hybrid flight-software stack.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="diagnostic verbosity on stderr (default: WARNING)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="run a seeded mission and write its logs")
    simulate.add_argument("config", help="mission config JSON")
    simulate.add_argument("--output-dir", help="override the config's output_dir")
    simulate.set_defaults(func=cmd_simulate)

    analyze = commands.add_parser("analyze", help="analyze mission logs")
    analyze.add_argument("vision", help="vision_pose_log.csv")
    analyze.add_argument("--mission", help="mission_log.csv")
    analyze.add_argument("--resource", help="resource_log.csv")
    analyze.add_argument("--bridge-stats", help="bridge_stats.json written by simulate")
    analyze.add_argument("--report", default="report.json", help="report path (default: report.json)")
    analyze.add_argument(
        "--active-window",
        nargs=2,
        type=float,
        metavar=("T0", "T1"),
        help="effective-rate window in seconds from the first vision sample",
    )
    analyze.add_argument(
        "--circular-yaw", action="store_true", help="use circular statistics for yaw"
    )
    analyze.set_defaults(func=cmd_analyze)

    bench = commands.add_parser("bench", help="measure bridge frame round trips")
    bench.add_argument("--frames", type=int, default=1000, help="frames to send (default: 1000)")
    bench.add_argument("--rate", type=float, default=100.0, help="frames per second (default: 100)")
    bench.add_argument(
        "--transport",
        choices=sorted(TRANSPORT_ALIASES),
        help="transport to measure (default: the TRANSPORT_CLASS setting)",
    )
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_BAD_INPUT
    configure_logging(args.log_level)

    try:
        return args.func(args)
    except (HybridFlightException, OSError, ValueError) as e:
        print(f"{args.command}: error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except Exception:
        logger.exception("Unexpected failure in %s", args.command)
        return EXIT_INTERNAL
