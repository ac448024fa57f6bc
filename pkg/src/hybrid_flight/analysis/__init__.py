"""Post-flight analysis of vision, mission and resource logs."""

from .kinematics import KinematicSeries, finite_diff_accel, finite_diff_velocity
from .logs import (
    MissionLog,
    ResourceLog,
    VisionLog,
    load_bridge_stats,
    load_mission_log,
    load_resource_log,
    load_vision_log,
)
from .mission import align_streams, attribute_gap_phase, mode_distribution
from .report import AnalysisReport, build_report, write_histogram_csv, write_report
from .statistics import pose_statistics, trajectory_extents
from .timing import (
    GapRecord,
    IntervalSeries,
    TimingMetrics,
    continuity_and_rate,
    detect_dropouts,
    latency_histogram,
    timing_metrics,
)

__all__ = [
    "AnalysisReport",
    "GapRecord",
    "IntervalSeries",
    "KinematicSeries",
    "MissionLog",
    "ResourceLog",
    "TimingMetrics",
    "VisionLog",
    "align_streams",
    "attribute_gap_phase",
    "build_report",
    "continuity_and_rate",
    "detect_dropouts",
    "finite_diff_accel",
    "finite_diff_velocity",
    "latency_histogram",
    "load_bridge_stats",
    "load_mission_log",
    "load_resource_log",
    "load_vision_log",
    "mode_distribution",
    "pose_statistics",
    "timing_metrics",
    "trajectory_extents",
    "write_histogram_csv",
    "write_report",
]
