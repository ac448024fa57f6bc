"""Position and orientation statistics over a vision log."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..exceptions import EmptyLog
from ..models import quat_to_euler
from .logs import VisionLog


@dataclass(frozen=True)
class AxisStats:
    mean: float
    std: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std}


def _axis(values: np.ndarray) -> AxisStats:
    return AxisStats(mean=float(np.mean(values)), std=float(np.std(values)))


def circular_stats(degrees: np.ndarray) -> AxisStats:
    """Circular mean and standard deviation, in degrees."""
    radians = np.radians(degrees)
    s, c = float(np.mean(np.sin(radians))), float(np.mean(np.cos(radians)))
    resultant = min(math.hypot(s, c), 1.0)
    std = math.sqrt(-2.0 * math.log(resultant)) if resultant > 0 else math.inf
    return AxisStats(mean=math.degrees(math.atan2(s, c)), std=math.degrees(std))


def euler_series(log: VisionLog) -> np.ndarray:
    """Roll, pitch and yaw in degrees for every sample, as an (n, 3) array."""
    angles = [quat_to_euler(q) for q in log.orientations]
    return np.array([(a.roll, a.pitch, a.yaw) for a in angles], dtype=float).reshape(-1, 3)


def pose_statistics(
    log: VisionLog, circular_yaw: bool = False
) -> Tuple[Dict[str, AxisStats], Dict[str, AxisStats]]:
    """Per-axis mean and population std of position (m) and Euler angles (deg).

    Yaw uses plain arithmetic on (-180, 180] unless ``circular_yaw`` is set.

    Raises:
        EmptyLog: If the log holds no samples.
    """
    if len(log) == 0:
        raise EmptyLog("Pose statistics need at least one sample.")
    position = {axis: _axis(log.positions[:, i]) for i, axis in enumerate("xyz")}
    euler = euler_series(log)
    orientation = {
        "roll": _axis(euler[:, 0]),
        "pitch": _axis(euler[:, 1]),
        "yaw": circular_stats(euler[:, 2]) if circular_yaw else _axis(euler[:, 2]),
    }
    return position, orientation


def trajectory_extents(log: VisionLog) -> Dict[str, float]:
    """Horizontal range (largest of the x and y spans) and vertical (z) range."""
    if len(log) == 0:
        raise EmptyLog("Trajectory extents need at least one sample.")
    spans = np.ptp(log.positions, axis=0)
    return {
        "horizontal_range_m": float(max(spans[0], spans[1])),
        "vertical_range_m": float(spans[2]),
    }
