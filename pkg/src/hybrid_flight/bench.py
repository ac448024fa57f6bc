"""Bridge round-trip benchmark.

One endpoint of a transport pair sends PoseTelemetry frames at a fixed rate;
the other reflects every frame it receives. Round-trip time is measured from
the frame's ``send_time_ns`` to its return.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import List, Optional, Type

from .analysis.timing import IntervalSeries, TimingMetrics, interval_metrics
from .bridge import MsgType, decode_frame, encode_frame, encode_pose
from .exceptions import FrameError
from .models import PoseSample
from .settings import app_settings
from .transport import AbstractTransport, SimTransport, UdpTransport

logger = logging.getLogger(__name__)

# How long a wall-clock run waits for stragglers after the last frame, seconds
DRAIN_TIMEOUT_S = 0.5

BENCH_POSE = PoseSample(t=0.0, position=(0.0, 0.0, 1.0), orientation=(0.0, 0.0, 0.0, 1.0))


@dataclass(frozen=True)
class BenchResult:
    frames_sent: int
    frames_returned: int
    frame_bytes: int
    rate_hz: float
    rtt: Optional[TimingMetrics]
    offered_kbps: float
    achieved_kbps: float

    @property
    def loss_pct(self) -> float:
        return 100.0 * (1 - self.frames_returned / self.frames_sent)

    def lines(self) -> List[str]:
        out = [
            f"frames sent={self.frames_sent} returned={self.frames_returned} "
            f"loss={self.loss_pct:.1f}% frame_bytes={self.frame_bytes}",
            f"offered={self.offered_kbps:.2f} kbps achieved={self.achieved_kbps:.2f} kbps",
        ]
        if self.rtt is None:
            out.append("rtt_ms n/a (no frames returned)")
        else:
            r = self.rtt
            out.append(
                f"rtt_ms mean={r.mean:.3f} median={r.median:.3f} std={r.std:.3f} "
                f"min={r.min:.3f} max={r.max:.3f} p95={r.p95:.3f} p99={r.p99:.3f}"
            )
        return out


def transport_options(transport_cls: Type[AbstractTransport], seed: int = 0) -> dict:
    if issubclass(transport_cls, UdpTransport):
        return {"host": app_settings.UDP_HOST, "ports": tuple(app_settings.UDP_PORTS)}
    if issubclass(transport_cls, SimTransport):
        return {"seed": seed}
    return {}


class BridgeBench:
    def __init__(self, sender: AbstractTransport, reflector: AbstractTransport):
        self.sender = sender
        self.reflector = reflector
        self.rtts_ms: List[float] = []
        self.bytes_returned = 0

    def _reflect(self, now_ns: int) -> None:
        for delivery in self.reflector.poll(now_ns):
            self.reflector.send(delivery.data, now_ns)

    def _collect(self, now_ns: int, timeout_s: float = 0.0) -> None:
        for delivery in self.sender.poll(now_ns, timeout_s):
            try:
                frame = decode_frame(delivery.data)
            except FrameError as e:
                logger.warning("Discarding corrupt reflection: %s", e)
                continue
            self.rtts_ms.append((delivery.arrival_ns - frame.send_time_ns) / 1e6)
            self.bytes_returned += len(delivery.data)

    def run(self, frames: int, rate_hz: float) -> BenchResult:
        if frames < 1:
            raise ValueError("The benchmark needs at least one frame.")
        if rate_hz <= 0:
            raise ValueError("The frame rate must be positive.")
        period_ns = int(round(1e9 / rate_hz))
        payload = encode_pose(BENCH_POSE)
        virtual = self.sender.virtual_time
        start_ns = 0 if virtual else self.sender.now_ns()
        frame_bytes = 0

        for seq in range(frames):
            due_ns = start_ns + seq * period_ns
            if not virtual:
                delay = (due_ns - self.sender.now_ns()) / 1e9
                if delay > 0:
                    time.sleep(delay)
            now_ns = due_ns if virtual else self.sender.now_ns()
            frame = encode_frame(MsgType.POSE_TELEMETRY, seq, now_ns, payload)
            frame_bytes = len(frame)
            self.sender.send(frame, now_ns)
            self._reflect(now_ns if virtual else self.reflector.now_ns())
            self._collect(now_ns if virtual else self.sender.now_ns())

        if virtual:
            horizon_ns = start_ns + frames * period_ns
            self._reflect(horizon_ns)
            self._collect(horizon_ns)
        else:
            deadline = time.monotonic() + DRAIN_TIMEOUT_S
            while len(self.rtts_ms) < frames and time.monotonic() < deadline:
                self._reflect(self.reflector.now_ns())
                self._collect(self.sender.now_ns(), timeout_s=0.01)

        duration_s = frames * period_ns / 1e9
        rtt = interval_metrics(IntervalSeries.from_intervals(self.rtts_ms)) if self.rtts_ms else None
        return BenchResult(
            frames_sent=frames,
            frames_returned=len(self.rtts_ms),
            frame_bytes=frame_bytes,
            rate_hz=rate_hz,
            rtt=rtt,
            offered_kbps=frames * frame_bytes * 8 / 1000.0 / duration_s,
            achieved_kbps=self.bytes_returned * 8 / 1000.0 / duration_s,
        )


def run_bench(
    transport_cls: Type[AbstractTransport], frames: int, rate_hz: float, **options
) -> BenchResult:
    """Run the benchmark over a fresh endpoint pair of ``transport_cls``.

    Raises:
        TransportUnavailable: If the endpoints cannot be created or used.
    """
    sender, reflector = transport_cls.pair(**{**transport_options(transport_cls), **options})
    try:
        return BridgeBench(sender, reflector).run(frames, rate_hz)
    finally:
        sender.close()
        reflector.close()
