"""Deterministic flight-critical executor.

The core runs a fixed set of components in rate groups under virtual time. All
input from the perception side arrives as bridge frames on one transport
endpoint, drained at tick boundaries by the ``bridge_rx`` component, so the
core never shares mutable state with the other side.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence

from .bridge import (
    BridgeFrame,
    Freshness,
    FreshnessMonitor,
    MsgType,
    SequenceCounter,
    decode_ack,
    decode_flight_state,
    decode_frame,
    decode_health,
    decode_pose,
    decode_resource,
    encode_command,
    encode_frame,
    encode_health,
)
from .exceptions import (
    DuplicateCommandId,
    FrameError,
    NonMonotonicClock,
    UnknownChannel,
    UnknownOpcode,
)
from .models import (
    AckStatus,
    Command,
    CommandAck,
    HealthStatus,
    Opcode,
    ns_to_seconds,
    seconds_to_ns,
    worst_health,
)
from .settings import app_settings
from .transport import AbstractTransport

logger = logging.getLogger(__name__)

Component = Callable[[int], None]


@dataclass(frozen=True)
class MissionEvent:
    """A notable state change inside the core, such as a health transition."""

    t: float
    kind: str
    source: str
    detail: str


# Rate groups


@dataclass(frozen=True)
class RateGroup:
    """Components executed together every ``period_ms``, in declared order."""

    period_ms: int
    members: tuple

    def __post_init__(self) -> None:
        if self.period_ms <= 0:
            raise ValueError(f"Rate group period must be positive, got {self.period_ms}")
        object.__setattr__(self, "members", tuple(self.members))


class RateGroupScheduler:
    """Runs rate groups against a virtual clock.

    Groups are ordered shortest period first (declaration order breaks ties).
    A tick runs every group instant that fell due since the previous tick, in
    time order, so a group of period P has run exactly ``floor(T / P)`` times
    after T of virtual time regardless of how the ticks were spaced.
    """

    def __init__(
        self,
        groups: Sequence[RateGroup],
        components: Mapping[str, Component],
        start_ns: int = 0,
    ):
        missing = {m for g in groups for m in g.members} - set(components)
        if missing:
            raise ValueError(f"Unknown rate group members: {sorted(missing)}")
        order = sorted(range(len(groups)), key=lambda i: (groups[i].period_ms, i))
        self._groups = [groups[i] for i in order]
        self._period_ns = [g.period_ms * 1_000_000 for g in self._groups]
        self._components = dict(components)
        self._start_ns = start_ns
        self._last_tick_ns = start_ns
        self._runs = [0] * len(self._groups)

    @property
    def groups(self) -> List[RateGroup]:
        return list(self._groups)

    @property
    def base_period_ns(self) -> int:
        return min(self._period_ns)

    def execution_counts(self) -> Dict[int, int]:
        """Returns how many times each group has run, keyed by period in ms."""
        return {g.period_ms: n for g, n in zip(self._groups, self._runs)}

    def tick(self, now_ns: int) -> int:
        """Advance the clock to ``now_ns`` and run every group that fell due.

        Returns:
            The number of group executions performed.

        Raises:
            NonMonotonicClock: If ``now_ns`` does not exceed the previous tick.
        """
        if now_ns <= self._last_tick_ns:
            raise NonMonotonicClock(
                f"Tick at {now_ns} ns does not advance past {self._last_tick_ns} ns."
            )
        elapsed = now_ns - self._start_ns
        due = []
        for index, period_ns in enumerate(self._period_ns):
            target = elapsed // period_ns
            for k in range(self._runs[index] + 1, target + 1):
                due.append((k * period_ns, index))
            self._runs[index] = target
        due.sort()

        for offset_ns, index in due:
            instant_ns = self._start_ns + offset_ns
            for member in self._groups[index].members:
                self._components[member](instant_ns)

        self._last_tick_ns = now_ns
        return len(due)


def scheduler_tick(core: "FlightCore", virtual_now: float) -> "FlightCore":
    """Tick ``core`` to ``virtual_now`` seconds and return it."""
    core.tick(seconds_to_ns(virtual_now))
    return core


# Telemetry database


class TelemetryPoint(NamedTuple):
    value: Any
    updated_at: float


class TelemetryDb:
    """Latest-value store over a channel set fixed at construction."""

    def __init__(self, channels: Sequence[str]):
        if len(set(channels)) != len(channels):
            raise ValueError("Telemetry channel ids must be unique.")
        self._index = {channel: i for i, channel in enumerate(channels)}
        self._slots: List[Optional[TelemetryPoint]] = [None] * len(channels)

    @property
    def capacity(self) -> int:
        return len(self._slots)

    def _slot(self, channel_id: str) -> int:
        try:
            return self._index[channel_id]
        except KeyError:
            raise UnknownChannel(f"Telemetry channel {channel_id!r} is not registered.")

    def record(self, channel_id: str, value: Any, t: float) -> None:
        self._slots[self._slot(channel_id)] = TelemetryPoint(value, t)

    def read(self, channel_id: str) -> Optional[TelemetryPoint]:
        """Returns the most recent write, or None if the channel was never written."""
        return self._slots[self._slot(channel_id)]

    def __len__(self) -> int:
        return len(self._slots)


def record_telemetry(db: TelemetryDb, channel_id: str, value: Any, t: float) -> TelemetryDb:
    db.record(channel_id, value, t)
    return db


# Command dispatch


@dataclass
class DispatcherState:
    sent: int = 0
    succeeded: int = 0
    rejected: int = 0
    timed_out: int = 0
    pending: Dict[int, float] = field(default_factory=dict)

    @property
    def success_rate_pct(self) -> Optional[float]:
        if self.sent == 0:
            return None
        return 100.0 * self.succeeded / self.sent

    def dump_state(self) -> dict:
        return {
            "sent": self.sent,
            "succeeded": self.succeeded,
            "rejected": self.rejected,
            "timed_out": self.timed_out,
            "pending": len(self.pending),
            "success_rate_pct": self.success_rate_pct,
        }


class CommandDispatcher:
    """Forwards commands and tracks their acknowledgments against deadlines."""

    def __init__(
        self, send: Callable[[Command], None], ack_timeout_s: Optional[float] = None
    ):
        self._send = send
        self._ack_timeout_s = (
            app_settings.ACK_TIMEOUT_S if ack_timeout_s is None else ack_timeout_s
        )
        self._seen: set = set()
        self.state = DispatcherState()

    @property
    def ack_timeout_s(self) -> float:
        return self._ack_timeout_s

    def dispatch(self, command: Command) -> float:
        """Forward ``command`` and open a pending entry.

        Returns:
            The acknowledgment deadline in seconds.

        Raises:
            DuplicateCommandId: If the id was dispatched before.
            UnknownOpcode: If the opcode is not defined.
        """
        if command.id in self._seen:
            raise DuplicateCommandId(f"Command id {command.id} was already dispatched.")
        try:
            Opcode(command.opcode)
        except ValueError:
            raise UnknownOpcode(f"Command {command.id} has opcode {command.opcode!r}.")

        self._send(command)
        self._seen.add(command.id)
        deadline = command.issued_at + self._ack_timeout_s
        self.state.sent += 1
        self.state.pending[command.id] = deadline
        logger.debug("Dispatched command %d (%s)", command.id, Opcode(command.opcode).name)
        return deadline

    def settle(self, ack: CommandAck) -> DispatcherState:
        """Close the pending entry matching ``ack``."""
        if self.state.pending.pop(ack.command_id, None) is None:
            logger.warning(
                "Ignoring ack for command %d: not pending (late or unknown)",
                ack.command_id,
            )
            return self.state

        if ack.status == AckStatus.SUCCESS:
            self.state.succeeded += 1
        elif ack.status == AckStatus.REJECTED:
            self.state.rejected += 1
            logger.warning("Command %d rejected by autopilot", ack.command_id)
        else:
            self.state.timed_out += 1
        return self.state

    def expire(self, now_s: float) -> List[int]:
        """Time out every pending command whose deadline has passed."""
        expired = sorted(
            cid for cid, deadline in self.state.pending.items() if now_s > deadline
        )
        for cid in expired:
            del self.state.pending[cid]
            self.state.timed_out += 1
            logger.warning("Command %d timed out without acknowledgment", cid)
        return expired


# Health monitoring


@dataclass
class HealthState:
    """Liveness of monitored components, judged from their last ping."""

    timeout_s: float
    last_ping: Dict[str, float] = field(default_factory=dict)
    status: Dict[str, HealthStatus] = field(default_factory=dict)

    @classmethod
    def for_components(
        cls, components: Sequence[str], timeout_s: float, start_s: float = 0.0
    ) -> "HealthState":
        return cls(
            timeout_s=timeout_s,
            last_ping={c: start_s for c in components},
            status={c: HealthStatus.HEALTHY for c in components},
        )

    @property
    def overall(self) -> HealthStatus:
        return worst_health(list(self.status.values()))

    def ping(self, component: str, now_s: float) -> None:
        self.last_ping[component] = now_s
        self.status.setdefault(component, HealthStatus.HEALTHY)

    def classify(self, age_s: float) -> HealthStatus:
        if age_s <= self.timeout_s:
            return HealthStatus.HEALTHY
        if age_s <= 2 * self.timeout_s:
            return HealthStatus.DEGRADED
        return HealthStatus.FAULT

    def check(self, now_s: float) -> List[MissionEvent]:
        """Recompute every status; returns one event per transition."""
        events = []
        for component in sorted(self.last_ping):
            new = self.classify(now_s - self.last_ping[component])
            old = self.status.get(component, HealthStatus.HEALTHY)
            if new != old:
                self.status[component] = new
                events.append(
                    MissionEvent(
                        t=now_s,
                        kind="health",
                        source=component,
                        detail=f"{old.name}->{new.name}",
                    )
                )
                log = logger.warning if new > old else logger.info
                log("%s health %s -> %s at t=%.3f", component, old.name, new.name, now_s)
        return events


def health_check(health: HealthState, virtual_now: float) -> HealthState:
    health.check(virtual_now)
    return health


# Executor

TELEMETRY_CHANNELS = (
    "pose",
    "pose.x",
    "pose.y",
    "pose.z",
    "autopilot.mode",
    "autopilot.armed",
    "autopilot.health",
    "autopilot.z",
    "autopilot.yaw_deg",
    "resource.cpu_pct",
    "resource.mem_mb",
    "resource.bandwidth_kbps",
    "perception.health",
    "link.freshness_pct",
    "link.rx_errors",
)

MONITORED_COMPONENTS = ("autopilot", "perception")

# Channels carrying latest-value state; a superseded frame on them is discarded.
STATE_CHANNELS = frozenset(
    {MsgType.POSE_TELEMETRY, MsgType.FLIGHT_STATE, MsgType.HEALTH, MsgType.RESOURCE}
)


class FlightCore:
    """The deterministic flight-critical side of the bridge.

    Components, by rate group (fastest group first):

    - ``bridge_rx``: drain the transport, verify frames, account freshness and
      route payloads into the telemetry database, dispatcher and health state.
    - ``sequencer``: release scripted commands whose time has come.
    - ``dispatcher``: time out commands whose deadline passed.
    - ``health``: recompute component health and send it across the bridge.
    - ``link_monitor``: publish link statistics to telemetry.
    """

    def __init__(
        self,
        transport: AbstractTransport,
        command_script: Sequence[Command] = (),
        rate_group_periods_ms: Optional[Sequence[int]] = None,
        ack_timeout_s: Optional[float] = None,
        staleness_threshold_ms: Optional[int] = None,
        health_timeout_periods: Optional[int] = None,
    ):
        periods = sorted(
            rate_group_periods_ms or app_settings.RATE_GROUP_PERIODS_MS
        )
        if staleness_threshold_ms is None:
            staleness_threshold_ms = app_settings.STALENESS_THRESHOLD_MS
        if health_timeout_periods is None:
            health_timeout_periods = app_settings.HEALTH_TIMEOUT_PERIODS

        self._transport = transport
        self._seq = SequenceCounter()
        self._script = deque(sorted(command_script, key=lambda c: (c.issued_at, c.id)))
        self.freshness = FreshnessMonitor(
            staleness_threshold_ns=int(staleness_threshold_ms) * 1_000_000
        )
        self.telemetry = TelemetryDb(TELEMETRY_CHANNELS)
        self.dispatcher = CommandDispatcher(self._send_command, ack_timeout_s)
        self.health = HealthState.for_components(
            MONITORED_COMPONENTS, timeout_s=health_timeout_periods * periods[-1] / 1000
        )
        self.events: List[MissionEvent] = []
        self.rx_errors = 0
        self._now_ns = 0
        self.scheduler = RateGroupScheduler(
            self._build_groups(periods),
            {
                "bridge_rx": self._bridge_rx,
                "sequencer": self._sequencer,
                "dispatcher": self._expire_commands,
                "health": self._check_health,
                "link_monitor": self._link_monitor,
            },
        )

    @staticmethod
    def _build_groups(periods: Sequence[int]) -> List[RateGroup]:
        if len(periods) == 1:
            members = ("bridge_rx", "sequencer", "dispatcher", "health", "link_monitor")
            return [RateGroup(periods[0], members)]
        groups = [RateGroup(periods[0], ("bridge_rx", "sequencer"))]
        middle = periods[1:-1]
        for period in middle:
            groups.append(RateGroup(period, ("link_monitor",)))
        slow = ("dispatcher", "health") if middle else ("dispatcher", "health", "link_monitor")
        groups.append(RateGroup(periods[-1], slow))
        return groups

    @property
    def base_period_ns(self) -> int:
        return self.scheduler.base_period_ns

    def tick(self, now_ns: int) -> int:
        return self.scheduler.tick(now_ns)

    def _send(self, msg_type: MsgType, payload: bytes, now_ns: int) -> None:
        frame = encode_frame(msg_type, self._seq.next(msg_type), now_ns, payload)
        self._transport.send(frame, now_ns)

    def _send_command(self, command: Command) -> None:
        self._send(MsgType.COMMAND, encode_command(command), self._now_ns)

    # Components

    def _bridge_rx(self, now_ns: int) -> None:
        for delivery in self._transport.poll(now_ns):
            try:
                frame = decode_frame(delivery.data)
            except FrameError as e:
                self.rx_errors += 1
                logger.warning("Dropping undecodable frame: %s", e)
                continue
            verdict = self.freshness.observe(frame, delivery.arrival_ns)
            if verdict is Freshness.STALE_SUPERSEDED and frame.msg_type in STATE_CHANNELS:
                continue
            self._route(frame, ns_to_seconds(now_ns))

    def _route(self, frame: BridgeFrame, now_s: float) -> None:
        db = self.telemetry
        if frame.msg_type == MsgType.POSE_TELEMETRY:
            pose = decode_pose(frame)
            db.record("pose", pose, pose.t)
            for axis, value in zip(("pose.x", "pose.y", "pose.z"), pose.position):
                db.record(axis, value, pose.t)
        elif frame.msg_type == MsgType.COMMAND_ACK:
            self.dispatcher.settle(decode_ack(frame))
        elif frame.msg_type == MsgType.FLIGHT_STATE:
            report = decode_flight_state(frame)
            self.health.ping("autopilot", now_s)
            db.record("autopilot.mode", report.mode.value, now_s)
            db.record("autopilot.armed", float(report.armed), now_s)
            db.record("autopilot.health", float(report.health), now_s)
            db.record("autopilot.z", report.position[2], now_s)
            db.record("autopilot.yaw_deg", report.yaw_deg, now_s)
        elif frame.msg_type == MsgType.HEALTH:
            self.health.ping("perception", now_s)
            db.record("perception.health", float(decode_health(frame)), now_s)
        elif frame.msg_type == MsgType.RESOURCE:
            sample = decode_resource(frame)
            db.record("resource.cpu_pct", sample.cpu_pct, sample.t)
            db.record("resource.mem_mb", sample.mem_mb, sample.t)
            db.record("resource.bandwidth_kbps", sample.bandwidth_kbps, sample.t)
        else:
            logger.warning("Unexpected %s frame at the flight core", frame.msg_type.name)

    def _sequencer(self, now_ns: int) -> None:
        now_s = ns_to_seconds(now_ns)
        self._now_ns = now_ns
        while self._script and self._script[0].issued_at <= now_s:
            command = self._script.popleft()
            self.dispatcher.dispatch(command)

    def _expire_commands(self, now_ns: int) -> None:
        now_s = ns_to_seconds(now_ns)
        for cid in self.dispatcher.expire(now_s):
            self.events.append(MissionEvent(now_s, "command", str(cid), "TIMEOUT"))

    def _check_health(self, now_ns: int) -> None:
        self.events.extend(self.health.check(ns_to_seconds(now_ns)))
        self._send(MsgType.HEALTH, encode_health(self.health.overall), now_ns)

    def _link_monitor(self, now_ns: int) -> None:
        now_s = ns_to_seconds(now_ns)
        self.telemetry.record("link.freshness_pct", self.freshness.freshness_pct, now_s)
        self.telemetry.record("link.rx_errors", float(self.rx_errors), now_s)
