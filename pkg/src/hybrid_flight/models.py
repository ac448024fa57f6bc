"""Shared domain types and pure conversions.

Every other module speaks in these types. They are immutable values, so they can
be handed across the bridge, stored in logs and compared in tests freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import InvalidCommand, NonFinite, NonUnitQuaternion, UnknownMode

Vector3 = Tuple[float, float, float]
Quaternion = Tuple[float, float, float, float]

QUATERNION_TOLERANCE = 1e-6
GIMBAL_LOCK_TOLERANCE_RAD = 1e-6


class FlightMode(str, Enum):
    """Autopilot flight modes, valued by their log names."""

    STABILIZE = "STABILIZE"
    GUIDED = "GUIDED"
    POSHOLD = "POSHOLD"
    LAND = "LAND"

    @property
    def code(self) -> int:
        """Returns the numeric mode code carried by SetMode commands."""
        return MODE_CODES[self]


# ArduCopter custom mode numbers
MODE_CODES = {
    FlightMode.STABILIZE: 0,
    FlightMode.GUIDED: 4,
    FlightMode.LAND: 9,
    FlightMode.POSHOLD: 16,
}
_MODES_BY_CODE = {code: mode for mode, code in MODE_CODES.items()}


class Opcode(IntEnum):
    """Ground command opcodes."""

    ARM = 1
    DISARM = 2
    SET_MODE = 3
    TAKEOFF = 4
    GOTO = 5
    LAND = 6


OPCODE_ARITY = {
    Opcode.ARM: 0,
    Opcode.DISARM: 0,
    Opcode.SET_MODE: 1,
    Opcode.TAKEOFF: 1,
    Opcode.GOTO: 3,
    Opcode.LAND: 0,
}

# Names accepted in command scripts
OPCODE_NAMES = {
    "Arm": Opcode.ARM,
    "Disarm": Opcode.DISARM,
    "SetMode": Opcode.SET_MODE,
    "Takeoff": Opcode.TAKEOFF,
    "Goto": Opcode.GOTO,
    "Land": Opcode.LAND,
}


class AckStatus(IntEnum):
    """Outcome of a command."""

    SUCCESS = 0
    REJECTED = 1
    TIMEOUT = 2


class HealthStatus(IntEnum):
    """Component health, ordered from best to worst."""

    HEALTHY = 0
    DEGRADED = 1
    FAULT = 2


@dataclass(frozen=True)
class EulerAngles:
    """Roll, pitch and yaw in degrees (intrinsic Z-Y-X)."""

    roll: float
    pitch: float
    yaw: float


@dataclass(frozen=True)
class PoseSample:
    """A timestamped 6-DoF pose: position in meters and a unit quaternion.

    The quaternion is stored scalar-last, ``(qx, qy, qz, qw)``, matching the
    column order of the vision log.
    """

    t: float
    position: Vector3
    orientation: Quaternion

    @property
    def x(self) -> float:
        return self.position[0]

    @property
    def y(self) -> float:
        return self.position[1]

    @property
    def z(self) -> float:
        return self.position[2]


@dataclass(frozen=True)
class Command:
    """A ground command addressed to the autopilot."""

    id: int
    opcode: Opcode
    args: Tuple[float, ...] = ()
    issued_at: float = 0.0

    def __post_init__(self) -> None:
        if self.id < 0:
            raise InvalidCommand(f"Command id must be unsigned, got {self.id}.")
        try:
            opcode = Opcode(self.opcode)
        except ValueError:
            # Undefined opcodes are left for the dispatcher to reject.
            return
        expected = OPCODE_ARITY[opcode]
        if len(self.args) != expected:
            raise InvalidCommand(
                f"{opcode.name} takes {expected} argument(s), got {len(self.args)}."
            )


@dataclass(frozen=True)
class CommandAck:
    """Acknowledgment of a command by the autopilot."""

    command_id: int
    status: AckStatus
    ack_at: float


@dataclass(frozen=True)
class ResourceSample:
    """Onboard resource usage at one instant."""

    t: float
    cpu_pct: float
    mem_mb: float
    bandwidth_kbps: float

    def __post_init__(self) -> None:
        values = (self.t, self.cpu_pct, self.mem_mb, self.bandwidth_kbps)
        if not all(math.isfinite(v) for v in values):
            raise NonFinite("Resource sample fields must be finite.")
        if not 0.0 <= self.cpu_pct <= 100.0:
            raise ValueError(f"cpu_pct must be within [0, 100], got {self.cpu_pct}")
        if self.mem_mb < 0 or self.bandwidth_kbps < 0:
            raise ValueError("mem_mb and bandwidth_kbps must be non-negative.")


def parse_mode(text: str) -> FlightMode:
    """Parse an exact uppercase mode name.

    Raises:
        UnknownMode: If ``text`` is not one of the four mode names.
    """
    try:
        return FlightMode(text)
    except ValueError:
        raise UnknownMode(f"Unknown flight mode {text!r}.") from None


def format_mode(mode: FlightMode) -> str:
    """Returns the log name of a mode."""
    return mode.value


def mode_from_code(code: float) -> FlightMode:
    """Resolve a SetMode numeric argument to a mode.

    Raises:
        UnknownMode: If the code does not name a supported mode.
    """
    if not math.isfinite(code) or code != int(code) or int(code) not in _MODES_BY_CODE:
        raise UnknownMode(f"Unknown flight mode code {code!r}.")
    return _MODES_BY_CODE[int(code)]


def _check_unit(q: Sequence[float]) -> np.ndarray:
    arr = np.asarray(q, dtype=float)
    if arr.shape != (4,):
        raise ValueError("A quaternion has exactly four components.")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("Quaternion components must be finite.")
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > QUATERNION_TOLERANCE:
        raise NonUnitQuaternion(f"Quaternion norm {norm!r} is not within 1e-6 of 1.")
    return arr / norm


def quat_to_euler(q: Sequence[float]) -> EulerAngles:
    """Convert a scalar-last unit quaternion to aerospace Euler angles.

    The convention is intrinsic Z-Y-X (yaw, then pitch, then roll), in degrees.
    At gimbal lock (pitch within 1e-6 rad of +/-90 degrees) roll is set to 0 and
    the whole residual rotation is reported as yaw.

    Args:
        q: Quaternion as ``(qx, qy, qz, qw)``.

    Returns:
        The Euler angles with roll and yaw in (-180, 180] and pitch in [-90, 90].

    Raises:
        NonUnitQuaternion: If the norm deviates from 1 by more than 1e-6.
    """
    x, y, z, w = _check_unit(q)
    sin_pitch = float(np.clip(2.0 * (w * y - z * x), -1.0, 1.0))
    pitch = math.asin(sin_pitch)

    if abs(abs(pitch) - math.pi / 2) <= GIMBAL_LOCK_TOLERANCE_RAD:
        roll = 0.0
        yaw = math.atan2(2.0 * (w * z - x * y), 1.0 - 2.0 * (x * x + z * z))
    else:
        roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
        yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))

    return EulerAngles(
        roll=math.degrees(roll), pitch=math.degrees(pitch), yaw=math.degrees(yaw)
    )


def euler_to_quat(roll: float, pitch: float, yaw: float) -> Quaternion:
    """Convert Z-Y-X Euler angles in degrees to a scalar-last unit quaternion."""
    cr, sr = math.cos(math.radians(roll) / 2), math.sin(math.radians(roll) / 2)
    cp, sp = math.cos(math.radians(pitch) / 2), math.sin(math.radians(pitch) / 2)
    cy, sy = math.cos(math.radians(yaw) / 2), math.sin(math.radians(yaw) / 2)
    return (
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
        cr * cp * cy + sr * sp * sy,
    )


def euler_to_matrix(angles: EulerAngles) -> np.ndarray:
    """Returns the body-to-world rotation matrix ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    r, p, y = (math.radians(a) for a in (angles.roll, angles.pitch, angles.yaw))
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def quat_to_matrix(q: Sequence[float]) -> np.ndarray:
    """Returns the rotation matrix of a scalar-last unit quaternion."""
    x, y, z, w = _check_unit(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def validate_pose(sample: PoseSample) -> None:
    """Validate a pose sample.

    Args:
        sample: The sample to check.

    Raises:
        NonFinite: If the timestamp or any position or quaternion component is
            NaN or infinite.
        NonUnitQuaternion: If the quaternion norm is not within 1e-6 of 1.
    """
    values = (sample.t, *sample.position, *sample.orientation)
    if len(sample.position) != 3 or len(sample.orientation) != 4:
        raise ValueError("A pose has a 3-vector position and a 4-component quaternion.")
    if not all(math.isfinite(v) for v in values):
        raise NonFinite(f"Pose sample at t={sample.t!r} has a non-finite field.")
    _check_unit(sample.orientation)


def wrap_degrees(angle: float) -> float:
    """Wrap an angle in degrees into (-180, 180]."""
    wrapped = math.fmod(angle + 180.0, 360.0)
    if wrapped <= 0.0:
        wrapped += 360.0
    return wrapped - 180.0


def seconds_to_ns(seconds: float) -> int:
    """Convert seconds to integer nanoseconds, rounding to nearest."""
    return int(round(seconds * 1e9))


def ns_to_seconds(ns: int) -> float:
    """Convert integer nanoseconds to float seconds, the unit every log and report uses."""
    return ns / 1e9


def worst_health(statuses: Sequence[HealthStatus]) -> HealthStatus:
    """Returns the worst status of a collection, Healthy when empty."""
    return max(statuses, default=HealthStatus.HEALTHY)


@dataclass(frozen=True)
class MissionEntry:
    """One row of the autopilot mission log."""

    t: float
    mode: FlightMode
    health: HealthStatus
    last_ack: Optional[Tuple[int, AckStatus]] = None
