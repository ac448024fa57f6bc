"""Shared test data: mission documents and synthetic logs."""

import numpy as np

from hybrid_flight.analysis import MissionLog, VisionLog
from hybrid_flight.models import FlightMode, HealthStatus, MissionEntry

# Gap end time (s), gap (ms), effective rate (Hz) and the phase reported for it
GAP_TABLE = [
    (179.62, 8124.80, 0.12, FlightMode.LAND),
    (167.08, 210.96, 4.74, FlightMode.LAND),
    (72.37, 81.05, 12.34, FlightMode.GUIDED),
    (16.68, 76.30, 13.11, FlightMode.GUIDED),
    (36.84, 76.22, 13.12, FlightMode.GUIDED),
]

HOVER_CONFIG = {
    "seed": 7,
    "duration_s": 60.0,
    "vision": {"nominal_rate_hz": 100.0},
    "trajectory": {
        "segments": [
            {"start_s": 0.0, "end_s": 60.0, "kind": "Hover", "target": [0.0, 0.0, 1.0]}
        ]
    },
    "command_script": [
        {"t": 1.0, "opcode": "SetMode", "args": ["GUIDED"]},
        {"t": 2.0, "opcode": "Arm", "args": []},
        {"t": 3.0, "opcode": "Takeoff", "args": [1.0]},
        {"t": 50.0, "opcode": "Land", "args": []},
    ],
    "rate_groups": [10, 100],
    "output_dir": "runs/hover",
}

# Fifteen commands that an autopilot following the transition rules accepts
MISSION_SCRIPT = [
    {"t": 1.0, "opcode": "SetMode", "args": ["GUIDED"]},
    {"t": 1.5, "opcode": "Arm", "args": []},
    {"t": 2.0, "opcode": "Takeoff", "args": [1.0]},
    {"t": 4.0, "opcode": "Goto", "args": [1.585, 0.0, 1.0]},
    {"t": 6.0, "opcode": "Goto", "args": [-1.585, 0.0, 1.2]},
    {"t": 8.0, "opcode": "Goto", "args": [0.0, 1.0, 1.38]},
    {"t": 10.0, "opcode": "Goto", "args": [0.0, -1.0, 1.0]},
    {"t": 12.0, "opcode": "SetMode", "args": ["POSHOLD"]},
    {"t": 13.0, "opcode": "SetMode", "args": ["GUIDED"]},
    {"t": 14.0, "opcode": "Goto", "args": [0.0, 0.0, 0.5]},
    {"t": 16.0, "opcode": "Land", "args": []},
    {"t": 24.0, "opcode": "SetMode", "args": ["STABILIZE"]},
    {"t": 25.0, "opcode": "SetMode", "args": ["GUIDED"]},
    {"t": 26.0, "opcode": "Arm", "args": []},
    {"t": 27.0, "opcode": "Disarm", "args": []},
]

MISSION_CONFIG = {
    "seed": 11,
    "duration_s": 30.0,
    "vision": {"nominal_rate_hz": 100.0, "jitter_std_ms": 1.0, "drop_prob": 0.05},
    "trajectory": None,
    "command_script": MISSION_SCRIPT,
    "rate_groups": [10, 100],
    "output_dir": "runs/mission",
}


def uniform_log(n=100, dt=0.01, start=0.0):
    """A vision log of ``n`` identity-attitude samples at the origin."""
    t = start + dt * np.arange(n)
    return VisionLog.from_arrays(t, np.zeros((n, 3)))


def log_from_intervals(dts_ms, start=0.0):
    """A vision log whose consecutive intervals are ``dts_ms``."""
    t = start + np.concatenate([[0.0], np.cumsum(dts_ms) / 1000.0])
    return VisionLog.from_arrays(t, np.zeros((len(t), 3)))


def gap_table_log():
    """A 10 ms vision log over [0, 185] s with the five reference gaps cut out."""
    t = np.round(np.arange(0, 18501) * 0.01, 6)
    for end, gap_ms, _, _ in GAP_TABLE:
        start = end - gap_ms / 1000.0
        t = t[~((t > start + 1e-9) & (t < end - 1e-9))]
        # The last sample before the gap moves onto the gap start.
        i = np.searchsorted(t, end - 1e-9) - 1
        t[i] = start
    return VisionLog.from_arrays(t, np.zeros((len(t), 3)))


def gap_table_mission():
    """Mission entries: STABILIZE at 0 s, GUIDED from 2 s, LAND from 160 s."""
    return MissionLog(
        [
            MissionEntry(0.0, FlightMode.STABILIZE, HealthStatus.HEALTHY),
            MissionEntry(2.0, FlightMode.GUIDED, HealthStatus.HEALTHY),
            MissionEntry(160.0, FlightMode.LAND, HealthStatus.HEALTHY),
        ]
    )


def write_csv(path, header, rows):
    """Write a CSV file from raw text rows."""
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
    return path
