"""Simulated flight controller.

``handle_command`` and ``step_dynamics`` are pure functions over
``AutopilotState``. The ``Autopilot`` class wraps them with the mission log,
the health reported by the flight core and synthesized roll/pitch noise.

Allowed SetMode transitions: STABILIZE <-> GUIDED, GUIDED <-> POSHOLD, any
mode to LAND while armed, and LAND to STABILIZE only once disarmed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import NegativeDt, UnknownMode
from .models import (
    AckStatus,
    Command,
    CommandAck,
    FlightMode,
    HealthStatus,
    MissionEntry,
    Opcode,
    Quaternion,
    Vector3,
    euler_to_quat,
    mode_from_code,
    wrap_degrees,
)

logger = logging.getLogger(__name__)

# At or below this altitude the vehicle counts as on the ground, meters
LANDED_ALTITUDE_M = 0.01

# Goto targets closer than this horizontally keep the current yaw setpoint
HEADING_MIN_DISTANCE_M = 0.1

ALLOWED_TRANSITIONS = {
    FlightMode.STABILIZE: {FlightMode.GUIDED},
    FlightMode.GUIDED: {FlightMode.STABILIZE, FlightMode.POSHOLD},
    FlightMode.POSHOLD: {FlightMode.GUIDED},
    FlightMode.LAND: set(),
}


@dataclass(frozen=True)
class AutopilotState:
    mode: FlightMode = FlightMode.STABILIZE
    armed: bool = False
    position: Vector3 = (0.0, 0.0, 0.0)
    setpoint: Vector3 = (0.0, 0.0, 0.0)
    yaw_deg: float = 0.0
    yaw_setpoint_deg: float = 0.0
    tracking_gain: float = 1.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.position):
            raise ValueError("Autopilot position must be finite.")
        if self.tracking_gain <= 0:
            raise ValueError("tracking_gain must be positive.")

    @property
    def altitude(self) -> float:
        return self.position[2]

    @property
    def landed(self) -> bool:
        return self.altitude <= LANDED_ALTITUDE_M


def _hold(state: AutopilotState, **changes) -> AutopilotState:
    """Returns ``state`` with the setpoint pinned to the current pose."""
    return replace(
        state, setpoint=state.position, yaw_setpoint_deg=state.yaw_deg, **changes
    )


def _land(state: AutopilotState) -> AutopilotState:
    x, y, _ = state.position
    return replace(state, mode=FlightMode.LAND, setpoint=(x, y, 0.0))


def _set_mode(state: AutopilotState, code: float) -> Optional[AutopilotState]:
    try:
        target = mode_from_code(code)
    except UnknownMode:
        return None
    if target == state.mode:
        return state
    if target is FlightMode.LAND:
        return _land(state) if state.armed else None
    if state.mode is FlightMode.LAND:
        if target is FlightMode.STABILIZE and not state.armed:
            return _hold(state, mode=target)
        return None
    if target in ALLOWED_TRANSITIONS[state.mode]:
        return _hold(state, mode=target)
    return None


def _apply(state: AutopilotState, command: Command) -> Optional[AutopilotState]:
    """Returns the new state, or None when the command is rejected."""
    opcode = command.opcode
    args = command.args
    if not all(math.isfinite(a) for a in args):
        return None

    if opcode == Opcode.ARM:
        if state.armed or state.mode is FlightMode.LAND:
            return None
        return _hold(state, armed=True)

    if opcode == Opcode.DISARM:
        if not state.armed or not state.landed:
            return None
        return replace(state, armed=False)

    if opcode == Opcode.SET_MODE:
        return _set_mode(state, args[0])

    if opcode == Opcode.TAKEOFF:
        altitude = args[0]
        if not state.armed or state.mode is not FlightMode.GUIDED or altitude <= 0:
            return None
        x, y, _ = state.position
        return replace(state, setpoint=(x, y, altitude))

    if opcode == Opcode.GOTO:
        if not state.armed or state.mode is not FlightMode.GUIDED:
            return None
        target = (args[0], args[1], args[2])
        dx, dy = target[0] - state.position[0], target[1] - state.position[1]
        yaw_setpoint = state.yaw_setpoint_deg
        if math.hypot(dx, dy) > HEADING_MIN_DISTANCE_M:
            yaw_setpoint = math.degrees(math.atan2(dy, dx))
        return replace(state, setpoint=target, yaw_setpoint_deg=yaw_setpoint)

    if opcode == Opcode.LAND:
        return _land(state) if state.armed else None

    return None


def handle_command(
    state: AutopilotState, command: Command, now: Optional[float] = None
) -> Tuple[AutopilotState, CommandAck]:
    """Apply ``command`` and acknowledge it.

    Rejections leave the state unchanged and are reported in the ack, never
    raised.

    Args:
        state: Current autopilot state.
        command: The command to handle.
        now: Acknowledgment time; defaults to the command's issue time.

    Returns:
        The new state and exactly one ack carrying ``command.id``.
    """
    ack_at = command.issued_at if now is None else now
    new_state = _apply(state, command)
    if new_state is None:
        return state, CommandAck(command.id, AckStatus.REJECTED, ack_at)
    return new_state, CommandAck(command.id, AckStatus.SUCCESS, ack_at)


def step_dynamics(state: AutopilotState, dt: float) -> AutopilotState:
    """Advance the first-order setpoint tracking by ``dt`` seconds.

    Raises:
        NegativeDt: If ``dt`` is negative.
    """
    if dt < 0:
        raise NegativeDt(f"Cannot step dynamics by {dt} s.")
    if dt == 0:
        return state
    k = state.tracking_gain * dt
    position = tuple(p + k * (s - p) for p, s in zip(state.position, state.setpoint))
    if state.mode is FlightMode.LAND:
        position = (position[0], position[1], max(position[2], 0.0))
    yaw_error = wrap_degrees(state.yaw_setpoint_deg - state.yaw_deg)
    yaw = wrap_degrees(state.yaw_deg + k * yaw_error)
    return replace(state, position=position, yaw_deg=yaw)


class Autopilot:
    """Stateful autopilot endpoint producing the mission log."""

    def __init__(
        self,
        state: Optional[AutopilotState] = None,
        attitude_noise_deg: float = 10.0,
        seed: int = 0,
    ):
        if attitude_noise_deg < 0:
            raise ValueError("attitude_noise_deg must not be negative.")
        self.state = state or AutopilotState()
        self.health = HealthStatus.HEALTHY
        self.entries: List[MissionEntry] = []
        self._noise_deg = attitude_noise_deg
        self._rng = np.random.default_rng(seed)
        self._roll_deg = 0.0
        self._pitch_deg = 0.0
        self._last_t = 0.0

    def _log(self, t: float, last_ack: Optional[Tuple[int, AckStatus]] = None) -> None:
        t = max(t, self._last_t)
        self._last_t = t
        self.entries.append(MissionEntry(t, self.state.mode, self.health, last_ack))

    def start(self, t: float = 0.0) -> None:
        """Log the initial state."""
        self._log(t)

    def on_command(self, command: Command, now: float) -> CommandAck:
        previous = self.state.mode
        self.state, ack = handle_command(self.state, command, now)
        if self.state.mode != previous:
            logger.info("Mode %s -> %s at t=%.3f", previous.value, self.state.mode.value, now)
        self._log(now, (ack.command_id, ack.status))
        return ack

    def on_health(self, status: HealthStatus) -> None:
        self.health = HealthStatus(status)

    def step(self, now: float, dt: float) -> None:
        self.state = step_dynamics(self.state, dt)
        if self.state.armed and not self.state.landed and self._noise_deg > 0:
            self._roll_deg, self._pitch_deg = self._rng.normal(0.0, self._noise_deg, 2)
        else:
            self._roll_deg = self._pitch_deg = 0.0

        if self.state.mode is FlightMode.LAND and self.state.armed and self.state.landed:
            self.state = replace(self.state, armed=False)
            logger.info("Landed and disarmed at t=%.3f", now)
        self._log(now)

    def pose(self, t: float) -> Tuple[Vector3, Quaternion]:
        """Current pose, usable as the vision source's pose provider."""
        # Keep attitude within the non-singular pitch range.
        roll = float(np.clip(self._roll_deg, -89.0, 89.0))
        pitch = float(np.clip(self._pitch_deg, -89.0, 89.0))
        return self.state.position, euler_to_quat(roll, pitch, self.state.yaw_deg)
