"""Binary framing across the flight-core / perception boundary.

Frame layout (all integers little-endian)::

    offset  size  field
         0     2  magic, b"FB"
         2     1  version, 1
         3     1  msg_type
         4     4  seq (per msg_type channel)
         8     8  send_time_ns
        16     2  payload_len
        18     n  payload
      18+n     4  CRC-32/ISO-HDLC over bytes [0, 18+n)
"""

from __future__ import annotations

import logging
import struct
import zlib
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Dict, Optional

from .exceptions import (
    BadMagic,
    BadVersion,
    CrcMismatch,
    FrameError,
    LengthMismatch,
    PayloadTooLarge,
    TruncatedFrame,
    UnknownMsgType,
    UnknownOpcode,
)
from .models import (
    AckStatus,
    Command,
    CommandAck,
    FlightMode,
    HealthStatus,
    Opcode,
    PoseSample,
    ResourceSample,
    mode_from_code,
    ns_to_seconds,
    seconds_to_ns,
)

logger = logging.getLogger(__name__)

MAGIC = b"FB"
VERSION = 1
HEADER = struct.Struct("<2sBBIQH")
CRC = struct.Struct("<I")
HEADER_SIZE = HEADER.size
CRC_SIZE = CRC.size
MAX_PAYLOAD = 0xFFFF
SEQ_MODULUS = 1 << 32

DEFAULT_STALENESS_THRESHOLD_NS = 500_000_000


class MsgType(IntEnum):
    """Bridge message types; each type is its own sequenced channel."""

    POSE_TELEMETRY = 1
    COMMAND = 2
    COMMAND_ACK = 3
    FLIGHT_STATE = 4
    HEALTH = 5
    RESOURCE = 6


@dataclass(frozen=True)
class FrameHeader:
    msg_type: MsgType
    seq: int
    send_time_ns: int
    payload_len: int
    magic: bytes = MAGIC
    version: int = VERSION


@dataclass(frozen=True)
class BridgeFrame:
    header: FrameHeader
    payload: bytes
    crc: int

    @property
    def msg_type(self) -> MsgType:
        return self.header.msg_type

    @property
    def seq(self) -> int:
        return self.header.seq

    @property
    def send_time_ns(self) -> int:
        return self.header.send_time_ns


def encode_frame(msg_type: int, seq: int, send_time_ns: int, payload: bytes) -> bytes:
    """Encode one bridge frame.

    Args:
        msg_type: One of the ``MsgType`` values.
        seq: Channel sequence number, 32-bit unsigned.
        send_time_ns: Send timestamp in nanoseconds, 64-bit unsigned.
        payload: Message body.

    Returns:
        ``header(18) ++ payload ++ crc(4)``.

    Raises:
        PayloadTooLarge: If the payload exceeds 65,535 bytes.
        UnknownMsgType: If ``msg_type`` is not defined.
    """
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(
            f"Payload of {len(payload)} bytes exceeds the {MAX_PAYLOAD}-byte limit."
        )
    try:
        msg_type = MsgType(msg_type)
    except ValueError:
        raise UnknownMsgType(f"Unknown message type {msg_type!r}.") from None
    try:
        header = HEADER.pack(MAGIC, VERSION, msg_type, seq, send_time_ns, len(payload))
    except struct.error as e:
        raise FrameError(f"Header field out of range: {e}") from e
    body = header + bytes(payload)
    return body + CRC.pack(zlib.crc32(body))


def decode_frame(data: bytes) -> BridgeFrame:
    """Decode and verify one bridge frame.

    Checks run in a fixed order: header length, magic, version, declared length,
    CRC, then message type.

    Raises:
        TruncatedFrame: If the data is shorter than the header or the declared
            frame.
        BadMagic: If the first two bytes are not the bridge magic.
        BadVersion: If the version byte is not supported.
        LengthMismatch: If the data is longer than the declared frame.
        CrcMismatch: If the stored CRC does not match.
        UnknownMsgType: If the message type is not defined.
    """
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise TruncatedFrame(
            f"Frame of {len(data)} bytes is shorter than the {HEADER_SIZE}-byte header."
        )
    magic, version, msg_type, seq, send_time_ns, payload_len = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"Bad frame magic {magic!r}.")
    if version != VERSION:
        raise BadVersion(f"Unsupported frame version {version}.")

    expected = HEADER_SIZE + payload_len + CRC_SIZE
    if len(data) < expected:
        raise TruncatedFrame(f"Frame declares {expected} bytes, got {len(data)}.")
    if len(data) > expected:
        raise LengthMismatch(f"Frame declares {expected} bytes, got {len(data)}.")

    body_end = HEADER_SIZE + payload_len
    (crc,) = CRC.unpack_from(data, body_end)
    computed = zlib.crc32(data[:body_end])
    if crc != computed:
        raise CrcMismatch(f"Stored CRC {crc:#010x} != computed {computed:#010x}.")

    try:
        msg_type = MsgType(msg_type)
    except ValueError:
        raise UnknownMsgType(f"Unknown message type {msg_type}.") from None

    header = FrameHeader(
        msg_type=msg_type,
        seq=seq,
        send_time_ns=send_time_ns,
        payload_len=payload_len,
    )
    return BridgeFrame(header=header, payload=data[HEADER_SIZE:body_end], crc=crc)


# Payload codecs

_POSE = struct.Struct("<7d")
_COMMAND_HEAD = struct.Struct("<IBB")
_ACK = struct.Struct("<IBQ")
_FLIGHT_STATE = struct.Struct("<BBB4d")
_RESOURCE = struct.Struct("<3d")


def encode_pose(sample: PoseSample) -> bytes:
    """Pose payload: x, y, z, qx, qy, qz, qw as binary64.

    The sample time travels in the frame's ``send_time_ns``.
    """
    return _POSE.pack(*sample.position, *sample.orientation)


def decode_pose(frame: BridgeFrame) -> PoseSample:
    values = _POSE.unpack(frame.payload)
    return PoseSample(
        t=ns_to_seconds(frame.send_time_ns),
        position=values[:3],
        orientation=values[3:],
    )


def encode_command(command: Command) -> bytes:
    head = _COMMAND_HEAD.pack(command.id, int(command.opcode), len(command.args))
    return head + struct.pack(f"<{len(command.args)}d", *command.args)


def decode_command(frame: BridgeFrame) -> Command:
    """Decode a command payload; ``issued_at`` comes from the frame send time."""
    command_id, opcode, nargs = _COMMAND_HEAD.unpack_from(frame.payload)
    args = struct.unpack_from(f"<{nargs}d", frame.payload, _COMMAND_HEAD.size)
    try:
        opcode = Opcode(opcode)
    except ValueError:
        raise UnknownOpcode(
            f"Unknown opcode {opcode} in command {command_id}."
        ) from None
    return Command(
        id=command_id,
        opcode=opcode,
        args=tuple(args),
        issued_at=ns_to_seconds(frame.send_time_ns),
    )


def encode_ack(ack: CommandAck) -> bytes:
    return _ACK.pack(ack.command_id, int(ack.status), seconds_to_ns(ack.ack_at))


def decode_ack(frame: BridgeFrame) -> CommandAck:
    command_id, status, ack_at_ns = _ACK.unpack(frame.payload)
    return CommandAck(
        command_id=command_id, status=AckStatus(status), ack_at=ns_to_seconds(ack_at_ns)
    )


@dataclass(frozen=True)
class FlightStateReport:
    """Autopilot state as carried by a FlightState frame."""

    mode: FlightMode
    armed: bool
    health: HealthStatus
    position: tuple
    yaw_deg: float


def encode_flight_state(report: FlightStateReport) -> bytes:
    return _FLIGHT_STATE.pack(
        report.mode.code,
        int(report.armed),
        int(report.health),
        *report.position,
        report.yaw_deg,
    )


def decode_flight_state(frame: BridgeFrame) -> FlightStateReport:
    code, armed, health, x, y, z, yaw = _FLIGHT_STATE.unpack(frame.payload)
    return FlightStateReport(
        mode=mode_from_code(code),
        armed=bool(armed),
        health=HealthStatus(health),
        position=(x, y, z),
        yaw_deg=yaw,
    )


def encode_health(status: HealthStatus) -> bytes:
    return bytes([int(status)])


def decode_health(frame: BridgeFrame) -> HealthStatus:
    return HealthStatus(frame.payload[0])


def encode_resource(sample: ResourceSample) -> bytes:
    return _RESOURCE.pack(sample.cpu_pct, sample.mem_mb, sample.bandwidth_kbps)


def decode_resource(frame: BridgeFrame) -> ResourceSample:
    cpu, mem, bandwidth = _RESOURCE.unpack(frame.payload)
    return ResourceSample(
        t=ns_to_seconds(frame.send_time_ns),
        cpu_pct=cpu,
        mem_mb=mem,
        bandwidth_kbps=bandwidth,
    )


# Freshness accounting


def seq_after(seq: int, reference: int) -> bool:
    """True when ``seq`` is newer than ``reference`` in 32-bit serial arithmetic.

    Sequence numbers wrap at 2**32, so ``0`` follows ``0xFFFFFFFF``. A
    forward distance of less than half the space counts as newer.
    """
    distance = (seq - reference) % SEQ_MODULUS
    return 0 < distance < SEQ_MODULUS // 2


class Freshness(str, Enum):
    FRESH = "fresh"
    STALE_SUPERSEDED = "stale_superseded"
    STALE_AGED = "stale_aged"


@dataclass
class ChannelStats:
    """Freshness counters for one receiving channel.

    A frame is stale_superseded when its seq is not after the highest seq
    already delivered on the channel (see ``seq_after``), and stale_aged when
    its age on arrival exceeds the staleness threshold. Otherwise it is fresh.
    """

    staleness_threshold_ns: int = DEFAULT_STALENESS_THRESHOLD_NS
    received: int = 0
    fresh: int = 0
    stale_superseded: int = 0
    stale_aged: int = 0
    highest_seq: Optional[int] = None

    @property
    def freshness_pct(self) -> float:
        if self.received == 0:
            return 100.0
        return 100.0 * self.fresh / self.received

    def classify(self, frame: BridgeFrame, arrival_time_ns: int) -> Freshness:
        """Classify ``frame`` and update the counters."""
        self.received += 1
        if self.highest_seq is not None and not seq_after(frame.seq, self.highest_seq):
            self.stale_superseded += 1
            return Freshness.STALE_SUPERSEDED

        self.highest_seq = frame.seq
        if arrival_time_ns - frame.send_time_ns > self.staleness_threshold_ns:
            self.stale_aged += 1
            return Freshness.STALE_AGED

        self.fresh += 1
        return Freshness.FRESH

    def dump_state(self) -> dict:
        return {
            "received": self.received,
            "fresh": self.fresh,
            "stale_superseded": self.stale_superseded,
            "stale_aged": self.stale_aged,
            "staleness_threshold_ms": self.staleness_threshold_ns / 1e6,
            "freshness_pct": self.freshness_pct,
        }


def update_channel_stats(
    stats: ChannelStats, frame: BridgeFrame, arrival_time_ns: int
) -> ChannelStats:
    """Classify a CRC-checked frame into ``stats`` and return it."""
    verdict = stats.classify(frame, arrival_time_ns)
    if verdict is not Freshness.FRESH:
        logger.debug(
            "%s frame seq=%d classified %s", frame.msg_type.name, frame.seq, verdict.value
        )
    return stats


@dataclass
class FreshnessMonitor:
    """Per-msg_type channel statistics for one receiving endpoint."""

    staleness_threshold_ns: int = DEFAULT_STALENESS_THRESHOLD_NS
    channels: Dict[MsgType, ChannelStats] = field(default_factory=dict)

    def observe(self, frame: BridgeFrame, arrival_time_ns: int) -> Freshness:
        stats = self.channels.get(frame.msg_type)
        if stats is None:
            stats = ChannelStats(staleness_threshold_ns=self.staleness_threshold_ns)
            self.channels[frame.msg_type] = stats
        return stats.classify(frame, arrival_time_ns)

    @property
    def received(self) -> int:
        return sum(s.received for s in self.channels.values())

    @property
    def fresh(self) -> int:
        return sum(s.fresh for s in self.channels.values())

    @property
    def freshness_pct(self) -> float:
        received = self.received
        return 100.0 if received == 0 else 100.0 * self.fresh / received

    def dump_state(self) -> dict:
        return {
            msg_type.name: self.channels[msg_type].dump_state()
            for msg_type in sorted(self.channels)
        }


class SequenceCounter:
    """Allocates per-channel sequence numbers, wrapping at 2**32."""

    def __init__(self, start: int = 0):
        self._start = start % SEQ_MODULUS
        self._next: Dict[MsgType, int] = {}

    def next(self, msg_type: MsgType) -> int:
        seq = self._next.get(msg_type, self._start)
        self._next[msg_type] = (seq + 1) % SEQ_MODULUS
        return seq
