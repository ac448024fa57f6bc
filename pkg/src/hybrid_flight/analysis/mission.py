"""Mission-log analysis and its join with the vision stream."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

from ..exceptions import EmptyLog
from ..models import AckStatus, FlightMode
from .logs import MissionLog, ResourceLog, VisionLog
from .timing import GapRecord


@dataclass(frozen=True)
class ModeShare:
    mode: FlightMode
    count: int
    pct: float

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "count": self.count, "pct": self.pct}


@dataclass(frozen=True)
class MissionPhase:
    """A contiguous run of mission entries in one mode, on the mission's time axis."""

    mode: FlightMode
    start_s: float
    end_s: float
    entries: int

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "entries": self.entries,
        }


def align_streams(vision: VisionLog, mission: MissionLog) -> float:
    """Seconds from the vision stream's first raw timestamp to the mission's first entry.

    The vision start is taken before load-time normalization, so a vision log
    starting at 100.0 and a mission log starting at 102.5 are 2.5 s apart.

    Raises:
        EmptyLog: If either log is empty.
    """
    if len(vision) == 0 or len(mission) == 0:
        raise EmptyLog("Both streams must be non-empty to align them.")
    return mission.entries[0].t - (float(vision.t[0]) + vision.origin_s)


def mode_distribution(mission: MissionLog) -> List[ModeShare]:
    """Entry count and percentage (one decimal) per mode, most frequent first.

    Raises:
        EmptyLog: If the mission log has no entries.
    """
    if len(mission) == 0:
        raise EmptyLog("Mode distribution needs at least one mission entry.")
    counts: Dict[FlightMode, int] = {}
    for entry in mission.entries:
        counts[entry.mode] = counts.get(entry.mode, 0) + 1
    total = len(mission)
    order = list(FlightMode)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], order.index(item[0])))
    return [ModeShare(mode, count, round(100.0 * count / total, 1)) for mode, count in ranked]


def attribute_gap_phase(
    gap: GapRecord, mission: MissionLog, offset: float
) -> Optional[FlightMode]:
    """Mode of the latest mission entry at or before the gap's end sample.

    Args:
        gap: A dropout on the vision log's time axis.
        mission: The mission log.
        offset: Seconds subtracted from mission times to land on that axis.

    Returns:
        The active mode, or None (unknown) when no entry precedes the gap.
    """
    times = [entry.t - offset for entry in mission.entries]
    index = bisect.bisect_right(times, gap.t) - 1
    return mission.entries[index].mode if index >= 0 else None


def mission_phases(mission: MissionLog) -> List[MissionPhase]:
    phases: List[MissionPhase] = []
    for entry in mission.entries:
        if phases and phases[-1].mode == entry.mode:
            last = phases[-1]
            phases[-1] = replace(last, end_s=entry.t, entries=last.entries + 1)
        else:
            if phases:
                phases[-1] = replace(phases[-1], end_s=entry.t)
            phases.append(MissionPhase(entry.mode, entry.t, entry.t, 1))
    return phases


def nearest_transition(
    gap: GapRecord, phases: Sequence[MissionPhase], offset: float
) -> Optional[float]:
    """Seconds between the gap's end and the nearest mode transition, if any."""
    transitions = [phase.start_s - offset for phase in phases[1:]]
    if not transitions:
        return None
    return min(abs(gap.t - t) for t in transitions)


def annotate_gaps(
    gaps: Sequence[GapRecord], mission: MissionLog, offset: float
) -> List[GapRecord]:
    phases = mission_phases(mission)
    return [
        replace(
            gap,
            phase=attribute_gap_phase(gap, mission, offset),
            nearest_transition_s=nearest_transition(gap, phases, offset),
        )
        for gap in gaps
    ]


def command_summary(mission: MissionLog) -> dict:
    """Acknowledgment counts recovered from the mission log.

    Each command id counts once, with its last logged status.
    """
    final: Dict[int, AckStatus] = {}
    for command_id, status in mission.acks:
        final[command_id] = status
    statuses = list(final.values())
    sent = len(statuses)
    succeeded = statuses.count(AckStatus.SUCCESS)
    return {
        "source": "mission_log",
        "sent": sent,
        "succeeded": succeeded,
        "rejected": statuses.count(AckStatus.REJECTED),
        "timed_out": statuses.count(AckStatus.TIMEOUT),
        "success_rate_pct": 100.0 * succeeded / sent if sent else None,
    }


def resource_summary(
    resources: ResourceLog, gap_window: Optional[Sequence[float]] = None
) -> dict:
    """Mean and peak of each resource column.

    Args:
        resources: The resource log.
        gap_window: ``(start_s, end_s)`` of the largest gap on the resource
            log's time axis; adds the mean CPU inside it.
    """
    if len(resources) == 0:
        raise EmptyLog("Resource summary needs at least one sample.")
    summary = {}
    for column in ("cpu_pct", "mem_mb", "bandwidth_kbps"):
        values = [getattr(s, column) for s in resources.samples]
        summary[column] = {"mean": sum(values) / len(values), "peak": max(values)}

    cpu_in_gap = None
    if gap_window is not None:
        start, end = gap_window
        inside = [s.cpu_pct for s in resources.samples if start < s.t < end]
        if inside:
            cpu_in_gap = sum(inside) / len(inside)
    summary["cpu_pct_during_largest_gap"] = cpu_in_gap
    return summary
