"""Scripted reference trajectories for the simulated motion-capture source."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import OutOfRange
from .models import Quaternion, Vector3, euler_to_quat, wrap_degrees

# Slack on segment boundaries, in seconds
TIME_TOLERANCE = 1e-9


class SegmentKind(str, Enum):
    HOVER = "Hover"
    LINEAR_TO = "LinearTo"
    ORBIT_ABOUT = "OrbitAbout"


@dataclass(frozen=True)
class Segment:
    """One piece of a trajectory.

    ``target`` is the hover point for Hover, the end point for LinearTo and the
    circle center for OrbitAbout. Yaw moves linearly from ``yaw_start_deg`` to
    ``yaw_end_deg`` (equal to the start when omitted).
    """

    start_s: float
    end_s: float
    kind: SegmentKind
    target: Vector3
    yaw_start_deg: float = 0.0
    yaw_end_deg: Optional[float] = None
    revolutions: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SegmentKind(self.kind))
        object.__setattr__(self, "target", tuple(float(v) for v in self.target))
        if len(self.target) != 3:
            raise ValueError("A segment target is a 3-vector.")
        values = (self.start_s, self.end_s, *self.target, self.yaw_start_deg, self.revolutions)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("Segment fields must be finite.")
        if self.end_s <= self.start_s:
            raise ValueError(f"Segment ends at {self.end_s} before it starts at {self.start_s}.")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def yaw_end(self) -> float:
        return self.yaw_start_deg if self.yaw_end_deg is None else self.yaw_end_deg

    @classmethod
    def from_dict(cls, data: dict) -> "Segment":
        return cls(
            start_s=float(data["start_s"]),
            end_s=float(data["end_s"]),
            kind=SegmentKind(data["kind"]),
            target=tuple(data["target"]),
            yaw_start_deg=float(data.get("yaw_start_deg", 0.0)),
            yaw_end_deg=data.get("yaw_end_deg"),
            revolutions=float(data.get("revolutions", 1.0)),
        )


class Trajectory:
    """A contiguous sequence of segments evaluated as a pose provider."""

    def __init__(self, segments: Sequence[Segment], initial_position: Optional[Vector3] = None):
        if not segments:
            raise ValueError("A trajectory needs at least one segment.")
        for prev, seg in zip(segments, segments[1:]):
            if abs(seg.start_s - prev.end_s) > TIME_TOLERANCE:
                raise ValueError(
                    f"Segments are not contiguous: {prev.end_s} then {seg.start_s}."
                )
        self.segments = list(segments)
        self._starts = [seg.start_s for seg in self.segments]
        self._origins = self._resolve_origins(initial_position)

    def _resolve_origins(self, initial_position: Optional[Vector3]) -> List[np.ndarray]:
        first = self.segments[0]
        if first.kind is SegmentKind.HOVER:
            position = np.asarray(first.target, dtype=float)
        elif initial_position is not None:
            position = np.asarray(initial_position, dtype=float)
        else:
            raise ValueError(f"A trajectory starting with {first.kind.value} needs an initial position.")

        origins = []
        for seg in self.segments:
            if seg.kind is SegmentKind.HOVER:
                position = np.asarray(seg.target, dtype=float)
            origins.append(position)
            if seg.kind is SegmentKind.ORBIT_ABOUT:
                radius = math.hypot(position[0] - seg.target[0], position[1] - seg.target[1])
                if radius == 0.0:
                    raise ValueError("An orbit must start away from its center.")
                position, _ = self._orbit(seg, position, seg.duration_s)
            else:
                position = np.asarray(seg.target, dtype=float)
        return origins

    @classmethod
    def from_dicts(
        cls, segments: Sequence[dict], initial_position: Optional[Vector3] = None
    ) -> "Trajectory":
        return cls([Segment.from_dict(s) for s in segments], initial_position)

    @property
    def start_s(self) -> float:
        return self.segments[0].start_s

    @property
    def end_s(self) -> float:
        return self.segments[-1].end_s

    @staticmethod
    def _orbit(seg: Segment, origin: np.ndarray, tau: float) -> Tuple[np.ndarray, float]:
        cx, cy = seg.target[0], seg.target[1]
        radius = math.hypot(origin[0] - cx, origin[1] - cy)
        theta = math.atan2(origin[1] - cy, origin[0] - cx)
        theta += 2.0 * math.pi * seg.revolutions * tau / seg.duration_s
        return np.array([cx + radius * math.cos(theta), cy + radius * math.sin(theta), origin[2]]), theta

    def evaluate(self, t: float) -> Tuple[Vector3, Quaternion]:
        """Returns the position and orientation at time ``t``.

        Raises:
            OutOfRange: If ``t`` is outside the trajectory's time span.
        """
        if not self.start_s - TIME_TOLERANCE <= t <= self.end_s + TIME_TOLERANCE:
            raise OutOfRange(f"t={t} is outside [{self.start_s}, {self.end_s}].")
        index = max(bisect.bisect_right(self._starts, t) - 1, 0)
        seg = self.segments[index]
        origin = self._origins[index]
        tau = min(max(t - seg.start_s, 0.0), seg.duration_s)
        fraction = tau / seg.duration_s

        if seg.kind is SegmentKind.HOVER:
            position = origin
        elif seg.kind is SegmentKind.LINEAR_TO:
            position = origin + fraction * (np.asarray(seg.target) - origin)
        else:
            position, _ = self._orbit(seg, origin, tau)

        yaw = wrap_degrees(seg.yaw_start_deg + fraction * (seg.yaw_end - seg.yaw_start_deg))
        return tuple(float(v) for v in position), euler_to_quat(0.0, 0.0, yaw)

    __call__ = evaluate


def trajectory_eval(traj: Trajectory, t: float) -> Tuple[Vector3, Quaternion]:
    return traj.evaluate(t)
