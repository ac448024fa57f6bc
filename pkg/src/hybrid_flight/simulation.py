"""Seeded end-to-end mission runs in virtual time.

One process hosts both sides of the bridge. The flight core owns one endpoint
of a ``SimTransport`` pair; the perception side (vision source, message bus,
autopilot and resource monitor) owns the other. Events are processed in
virtual-time order and all randomness comes from the mission seed, so a
config always produces the same output files.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .analysis.logs import write_mission_log, write_resource_log, write_vision_log
from .autopilot import Autopilot, AutopilotState
from .bridge import (
    Freshness,
    FlightStateReport,
    FreshnessMonitor,
    MsgType,
    SequenceCounter,
    decode_command,
    decode_frame,
    decode_health,
    encode_ack,
    encode_flight_state,
    encode_frame,
    encode_health,
    encode_pose,
    encode_resource,
)
from .bus import (
    TOPIC_FC_ACK,
    TOPIC_FC_STATE,
    TOPIC_VISION_POSE,
    MessageBus,
    QosPolicy,
    Reliability,
)
from .config import MissionConfig
from .exceptions import FrameError, UnknownOpcode
from .flight_core import FlightCore
from .models import (
    CommandAck,
    HealthStatus,
    MissionEntry,
    PoseSample,
    ResourceSample,
    ns_to_seconds,
    seconds_to_ns,
)
from .resources import ResourceMonitor
from .settings import app_settings
from .transport import SimTransport
from .vision import VisionSource

logger = logging.getLogger(__name__)

VISION_LOG = "vision_pose_log.csv"
MISSION_LOG = "mission_log.csv"
RESOURCE_LOG = "resource_log.csv"
BRIDGE_STATS = "bridge_stats.json"


@dataclass
class MissionResult:
    vision_samples: List[PoseSample]
    mission_entries: List[MissionEntry]
    resource_samples: List[ResourceSample]
    bridge_stats: Dict[str, Any]

    def write(self, output_dir: Union[str, Path]) -> List[Path]:
        """Write the three logs and the bridge statistics into ``output_dir``."""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        paths = [output_dir / name for name in (VISION_LOG, MISSION_LOG, RESOURCE_LOG, BRIDGE_STATS)]
        write_vision_log(paths[0], self.vision_samples)
        write_mission_log(paths[1], self.mission_entries)
        write_resource_log(paths[2], self.resource_samples)
        paths[3].write_text(json.dumps(self.bridge_stats, indent=2) + "\n", encoding="utf-8")
        return paths


class MissionRunner:
    """Wires one mission together and runs it to completion."""

    def __init__(self, config: MissionConfig):
        self.config = config
        self._core_link, self._link = SimTransport.pair(
            seed=config.seed, **config.transport.options()
        )
        self.core = FlightCore(
            self._core_link,
            config.command_script,
            rate_group_periods_ms=config.rate_groups,
        )
        self.autopilot = Autopilot(
            AutopilotState(tracking_gain=config.autopilot.tracking_gain),
            attitude_noise_deg=config.autopilot.attitude_noise_deg,
            seed=config.seed + 2,
        )
        provider = config.trajectory if config.trajectory is not None else self.autopilot.pose
        self.vision = VisionSource(config.vision, provider)
        self.resources = ResourceMonitor(config.resources, seed=config.seed + 3)
        self.freshness = FreshnessMonitor(
            staleness_threshold_ns=app_settings.STALENESS_THRESHOLD_MS * 1_000_000
        )
        self._seq = SequenceCounter()
        self._now_ns = 0
        self.rx_errors = 0
        self.publish_stalls = 0

        self.vision_samples: List[PoseSample] = []
        self.resource_samples: List[ResourceSample] = []
        self.bus = MessageBus()
        self.bus.subscribe(
            TOPIC_VISION_POSE, self.vision_samples.append, QosPolicy(Reliability.RELIABLE, 100)
        )
        self.bus.subscribe(
            TOPIC_VISION_POSE, self._forward_pose, QosPolicy(Reliability.BEST_EFFORT, 1)
        )
        self.bus.subscribe(
            TOPIC_FC_STATE, self._forward_state, QosPolicy(Reliability.BEST_EFFORT, 1)
        )
        self.bus.subscribe(TOPIC_FC_ACK, self._forward_ack, QosPolicy(Reliability.RELIABLE, 10))

    def _publish(self, topic: str, message: Any) -> None:
        if not self.bus.publish(topic, message):
            self.publish_stalls += 1
            logger.warning(
                "Publisher blocked on %s at t=%.6f s; delivery deferred",
                topic,
                ns_to_seconds(self._now_ns),
            )

    # Perception-side bridge endpoint

    def _send(self, msg_type: MsgType, payload: bytes, send_time_ns: int) -> None:
        frame = encode_frame(msg_type, self._seq.next(msg_type), send_time_ns, payload)
        self._link.send(frame, self._now_ns)

    def _forward_pose(self, sample: PoseSample) -> None:
        self._send(MsgType.POSE_TELEMETRY, encode_pose(sample), seconds_to_ns(sample.t))

    def _forward_state(self, report: FlightStateReport) -> None:
        self._send(MsgType.FLIGHT_STATE, encode_flight_state(report), self._now_ns)

    def _forward_ack(self, ack: CommandAck) -> None:
        self._send(MsgType.COMMAND_ACK, encode_ack(ack), self._now_ns)

    def _receive(self, now_ns: int) -> None:
        now_s = ns_to_seconds(now_ns)
        for delivery in self._link.poll(now_ns):
            try:
                frame = decode_frame(delivery.data)
            except FrameError as e:
                self.rx_errors += 1
                logger.warning("Dropping undecodable frame: %s", e)
                continue
            verdict = self.freshness.observe(frame, delivery.arrival_ns)
            if frame.msg_type == MsgType.COMMAND:
                try:
                    command = decode_command(frame)
                except UnknownOpcode as e:
                    logger.warning("%s", e)
                    continue
                ack = self.autopilot.on_command(command, now_s)
                self._publish(TOPIC_FC_ACK, ack)
            elif frame.msg_type == MsgType.HEALTH:
                if verdict is not Freshness.STALE_SUPERSEDED:
                    self.autopilot.on_health(decode_health(frame))
            else:
                logger.warning("Unexpected %s frame at the perception node", frame.msg_type.name)

    def _state_report(self) -> FlightStateReport:
        state = self.autopilot.state
        return FlightStateReport(
            mode=state.mode,
            armed=state.armed,
            health=self.autopilot.health,
            position=state.position,
            yaw_deg=state.yaw_deg,
        )

    # Event loop

    def run(self) -> MissionResult:
        end_ns = seconds_to_ns(self.config.duration_s)
        core_period = self.core.base_period_ns
        autopilot_period = int(round(1e9 / app_settings.AUTOPILOT_RATE_HZ))
        resource_period = int(round(1e9 / app_settings.RESOURCE_RATE_HZ))
        next_core, next_autopilot, next_resource = core_period, autopilot_period, resource_period

        logger.info(
            "Running mission: %.1f s, %d commands, seed %d",
            self.config.duration_s,
            len(self.config.command_script),
            self.config.seed,
        )
        self.autopilot.start(0.0)
        while True:
            vision_ns = self.vision.next_instant_ns
            now = min(next_core, next_autopilot, next_resource)
            if vision_ns is not None:
                now = min(now, vision_ns)
            if now > end_ns:
                break
            self._now_ns = now
            now_s = ns_to_seconds(now)
            blocked = self.vision.in_gap(now)

            self._receive(now)
            if vision_ns == now:
                sample = self.vision.step(now)
                if sample is not None:
                    self._publish(TOPIC_VISION_POSE, sample)
            if now == next_autopilot:
                self.autopilot.step(now_s, autopilot_period / 1e9)
                self._publish(TOPIC_FC_STATE, self._state_report())
                if not blocked:
                    self._send(MsgType.HEALTH, encode_health(HealthStatus.HEALTHY), now)
                next_autopilot += autopilot_period
            self.bus.route()

            if now == next_resource:
                total = self._link.bytes_sent + self._core_link.bytes_sent
                sample = self.resources.sample(now_s, total, blocked)
                self.resource_samples.append(sample)
                self._send(MsgType.RESOURCE, encode_resource(sample), now)
                next_resource += resource_period
            if now == next_core:
                self.core.tick(now)
                next_core += core_period

        # Held reliable messages still reach their subscribers
        while self.bus.backlog():
            self.bus.route()

        logger.info(
            "Mission finished: %d vision samples, %d mission entries, %d commands sent",
            len(self.vision_samples),
            len(self.autopilot.entries),
            self.core.dispatcher.state.sent,
        )
        return MissionResult(
            vision_samples=list(self.vision_samples),
            mission_entries=list(self.autopilot.entries),
            resource_samples=list(self.resource_samples),
            bridge_stats=self.bridge_stats(),
        )

    def bridge_stats(self) -> Dict[str, Any]:
        received = self.core.freshness.received + self.freshness.received
        fresh = self.core.freshness.fresh + self.freshness.fresh
        window = self.config.active_window
        return {
            "freshness_pct": 100.0 if received == 0 else 100.0 * fresh / received,
            "active_window_s": list(window) if window is not None else None,
            "endpoints": {
                "flight_core": self.core.freshness.dump_state(),
                "perception": self.freshness.dump_state(),
            },
            "dispatcher": self.core.dispatcher.state.dump_state(),
            "transport": {
                "flight_core": self._core_link.dump_state(),
                "perception": self._link.dump_state(),
            },
            "rx_errors": {"flight_core": self.core.rx_errors, "perception": self.rx_errors},
            "health_events": [
                {"t": e.t, "source": e.source, "detail": e.detail}
                for e in self.core.events
                if e.kind == "health"
            ],
            "bus": self.bus.dump_state(),
            "publish_stalls": self.publish_stalls,
        }


def run_mission(config: MissionConfig, output_dir: Optional[Union[str, Path]] = None) -> MissionResult:
    """Run ``config`` and write its outputs to ``output_dir`` (default: the config's)."""
    result = MissionRunner(config).run()
    result.write(config.output_dir if output_dir is None else output_dir)
    return result
