"""Centered finite-difference velocity and acceleration."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from ..exceptions import TooFewSamples
from .logs import VisionLog
from .timing import GapRecord


@dataclass(frozen=True, eq=False)
class KinematicSeries:
    """Derivatives at interior sample times; ``v`` and ``a`` are (n, 3) arrays."""

    t: np.ndarray
    v: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.t)

    def speed(self) -> np.ndarray:
        if self.v is None:
            raise ValueError("Series holds no velocities.")
        return np.linalg.norm(self.v, axis=1)


def centered_difference(t: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Derivative at interior points, using the local mean span as the step.

    The step at point i is ``(t[i+1] - t[i-1]) / 2``, so the stencil reduces to
    the textbook centered difference on a uniform grid.
    """
    if len(t) < 3:
        raise TooFewSamples(f"A centered difference needs 3 points, got {len(t)}.")
    span = t[2:] - t[:-2]
    return (values[2:] - values[:-2]) / span[:, None]


def finite_diff_velocity(log: VisionLog) -> KinematicSeries:
    """Velocity at every interior sample of ``log`` (n - 2 points).

    Raises:
        TooFewSamples: With fewer than 3 samples.
    """
    v = centered_difference(log.t, log.positions)
    return KinematicSeries(t=log.t[1:-1], v=v)


def finite_diff_accel(series: KinematicSeries) -> KinematicSeries:
    """Acceleration at every interior point of a velocity series.

    Raises:
        TooFewSamples: With fewer than 3 velocity points.
    """
    if series.v is None:
        raise ValueError("Series holds no velocities.")
    a = centered_difference(series.t, series.v)
    return KinematicSeries(t=series.t[1:-1], a=a)


def motion_summary(log: VisionLog) -> Optional[dict]:
    """Mean and peak speed and peak acceleration magnitude, or None if too short."""
    if len(log) < 5:
        return None
    velocity = finite_diff_velocity(log)
    accel = finite_diff_accel(velocity)
    speed = velocity.speed()
    return {
        "velocity_points": len(velocity),
        "acceleration_points": len(accel),
        "speed_mean_mps": float(np.mean(speed)),
        "speed_max_mps": float(np.max(speed)),
        "accel_max_mps2": float(np.max(np.linalg.norm(accel.a, axis=1))),
    }


def gap_motion(gaps: Sequence[GapRecord], log: VisionLog) -> List[GapRecord]:
    """Attach the displacement across each gap and the implied mean speed."""
    result = []
    for gap in gaps:
        before, after = log.positions[gap.index - 1], log.positions[gap.index]
        displacement = float(np.linalg.norm(after - before))
        result.append(
            replace(gap, displacement_m=displacement, speed_mps=displacement / (gap.gap_ms / 1000.0))
        )
    return result
