"""Assembling, serializing and writing the analysis report."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..settings import app_settings
from .kinematics import gap_motion, motion_summary
from .logs import MissionLog, ResourceLog, VisionLog
from .mission import (
    align_streams,
    annotate_gaps,
    command_summary,
    mission_phases,
    mode_distribution,
    resource_summary,
)
from .statistics import pose_statistics, trajectory_extents
from .timing import (
    GapRecord,
    LatencyHistogram,
    TimingMetrics,
    continuity_and_rate,
    detect_dropouts,
    latency_histogram,
    resolve_window,
    timing_metrics,
)

logger = logging.getLogger(__name__)

# Absolute threshold for the secondary dropout count, ms
LONG_DROPOUT_MS = 50.0

REPORT_KEYS = (
    "mission_summary",
    "timing",
    "continuity_pct",
    "effective_rate_hz",
    "gaps",
    "dropouts_over_50ms",
    "position_stats",
    "orientation_stats",
    "trajectory_extents",
    "kinematics",
    "mode_distribution",
    "mission_phases",
    "freshness_pct",
    "resource_summary",
    "latency_histogram",
)


@dataclass
class AnalysisReport:
    """Every metric of one analysis run.

    Fields that need an input that was not supplied are None and serialize
    as null.
    """

    mission_summary: Dict[str, Any]
    timing: TimingMetrics
    continuity_pct: float
    effective_rate_hz: float
    gaps: List[GapRecord]
    dropouts_over_50ms: int
    position_stats: Dict[str, Any]
    orientation_stats: Dict[str, Any]
    trajectory_extents: Dict[str, float]
    kinematics: Optional[Dict[str, Any]]
    histogram: LatencyHistogram
    mode_distribution: Optional[List[Any]] = None
    mission_phases: Optional[List[Any]] = None
    freshness_pct: Optional[float] = None
    resource_summary: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        values = {
            "mission_summary": self.mission_summary,
            "timing": self.timing.to_dict(),
            "continuity_pct": self.continuity_pct,
            "effective_rate_hz": self.effective_rate_hz,
            "gaps": [gap.to_dict() for gap in self.gaps],
            "dropouts_over_50ms": self.dropouts_over_50ms,
            "position_stats": {k: v.to_dict() for k, v in self.position_stats.items()},
            "orientation_stats": {k: v.to_dict() for k, v in self.orientation_stats.items()},
            "trajectory_extents": self.trajectory_extents,
            "kinematics": self.kinematics,
            "mode_distribution": (
                None
                if self.mode_distribution is None
                else [share.to_dict() for share in self.mode_distribution]
            ),
            "mission_phases": (
                None
                if self.mission_phases is None
                else [phase.to_dict() for phase in self.mission_phases]
            ),
            "freshness_pct": self.freshness_pct,
            "resource_summary": self.resource_summary,
            "latency_histogram": self.histogram.to_dict(),
        }
        return {key: values[key] for key in REPORT_KEYS}

    def to_json(self) -> str:
        return json.dumps(_finite(self.to_dict()), indent=2, allow_nan=False) + "\n"

    def summary_line(self) -> str:
        commands = self.mission_summary.get("commands") or {}
        success = commands.get("success_rate_pct")
        success_text = "n/a" if success is None else f"{success:.1f}%"
        return (
            f"duration={self.mission_summary['duration_s']:.1f}s "
            f"samples={self.mission_summary['vision_samples']} "
            f"continuity={self.continuity_pct:.2f}% "
            f"success={success_text}"
        )


def _finite(value: Any) -> Any:
    """Replace non-finite floats with None so the document stays valid JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_finite(v) for v in value]
    return value


def _bridge_commands(bridge_stats: Dict[str, Any]) -> Dict[str, Any]:
    dispatcher = bridge_stats["dispatcher"]
    return {
        "source": "bridge_stats",
        "sent": dispatcher["sent"],
        "succeeded": dispatcher["succeeded"],
        "rejected": dispatcher["rejected"],
        "timed_out": dispatcher["timed_out"],
        "success_rate_pct": dispatcher["success_rate_pct"],
    }


def build_report(
    vision: VisionLog,
    mission: Optional[MissionLog] = None,
    resources: Optional[ResourceLog] = None,
    bridge_stats: Optional[Dict[str, Any]] = None,
    active_window: Optional[Tuple[float, float]] = None,
    circular_yaw: bool = False,
    histogram_max_ms: Optional[int] = None,
) -> AnalysisReport:
    """Run every analysis over the supplied logs.

    Args:
        vision: The vision log (required).
        mission: Optional mission log; enables mode, phase and command fields.
        resources: Optional resource log; enables the resource summary.
        bridge_stats: Optional bridge statistics document written by
            ``simulate``; supplies freshness, dispatcher counts and the
            mission's active window.
        active_window: Effective-rate window in vision-log seconds. Defaults
            to the mission's window from ``bridge_stats``, then to the span
            of the vision log.
        circular_yaw: Use circular statistics for yaw.
        histogram_max_ms: Upper edge of the 1 ms histogram bins.
    """
    if histogram_max_ms is None:
        histogram_max_ms = app_settings.HISTOGRAM_MAX_MS

    if active_window is None and bridge_stats is not None:
        mission_window = bridge_stats.get("active_window_s")
        if mission_window is not None:
            # Mission clock onto the normalized vision axis
            active_window = (
                mission_window[0] - vision.origin_s,
                mission_window[1] - vision.origin_s,
            )

    series, timing = timing_metrics(vision)
    gaps = gap_motion(detect_dropouts(series), vision)
    long_dropouts = len(detect_dropouts(series, threshold_ms=LONG_DROPOUT_MS))
    continuity, rate = continuity_and_rate(vision, gaps, active_window)
    position_stats, orientation_stats = pose_statistics(vision, circular_yaw=circular_yaw)

    summary: Dict[str, Any] = {
        "duration_s": vision.duration_s,
        "vision_samples": len(vision),
        "mission_entries": None,
        "active_window_s": list(resolve_window(vision, active_window)),
        "stream_offset_s": None,
        "commands": None,
    }

    distribution = phases = None
    if mission is not None:
        offset = align_streams(vision, mission)
        # Mission times onto the normalized vision axis
        gaps = annotate_gaps(gaps, mission, offset + vision.origin_s)
        distribution = mode_distribution(mission)
        phases = mission_phases(mission)
        summary["mission_entries"] = len(mission)
        summary["stream_offset_s"] = offset
        summary["duration_s"] = max(
            vision.duration_s, mission.entries[-1].t - mission.entries[0].t
        )
        summary["commands"] = command_summary(mission)

    freshness = None
    if bridge_stats is not None:
        freshness = bridge_stats.get("freshness_pct")
        summary["commands"] = _bridge_commands(bridge_stats)

    resource = None
    if resources is not None:
        largest_gap = None
        if gaps:
            end = gaps[0].t + vision.origin_s
            largest_gap = (end - gaps[0].gap_ms / 1000.0, end)
        resource = resource_summary(resources, largest_gap)

    logger.info("Analyzed %d samples, %d gaps", len(vision), len(gaps))
    return AnalysisReport(
        mission_summary=summary,
        timing=timing,
        continuity_pct=continuity,
        effective_rate_hz=rate,
        gaps=gaps,
        dropouts_over_50ms=long_dropouts,
        position_stats=position_stats,
        orientation_stats=orientation_stats,
        trajectory_extents=trajectory_extents(vision),
        kinematics=motion_summary(vision),
        histogram=latency_histogram(series, histogram_max_ms),
        mode_distribution=distribution,
        mission_phases=phases,
        freshness_pct=freshness,
        resource_summary=resource,
    )


def write_report(report: AnalysisReport, path: Union[str, Path]) -> None:
    Path(path).write_text(report.to_json(), encoding="utf-8")
    logger.info("Wrote report %s", path)


def write_histogram_csv(histogram: LatencyHistogram, path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["bin_start_ms", "bin_end_ms", "count"])
        for (start, end), count in zip(histogram.edges, histogram.counts):
            writer.writerow([f"{start:g}", "inf" if math.isinf(end) else f"{end:g}", count])
    logger.info("Wrote histogram %s", path)
