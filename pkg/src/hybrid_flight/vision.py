"""Simulated motion-capture pose source.

Sample instants are planned on a one-microsecond clock: nominal instants every
``1 / nominal_rate_hz``, each perturbed by seeded Gaussian jitter. The
unperturbed grid decides which instants exist, so jitter that is small against
the period never changes the sample count. Jitter is clamped so the stream
stays strictly increasing and no instant crosses a gap boundary or the end of
the active window.

A gap window models the logging node blocked on file I/O. The first grid
instant at or after the window start is published at the start itself, the
next sample is published exactly at the window end, and the grid restarts
from there. The interval measured across a gap is therefore its length. Both
boundary samples are exempt from random drops.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .models import PoseSample, Quaternion, Vector3, ns_to_seconds, seconds_to_ns

logger = logging.getLogger(__name__)

PoseProvider = Callable[[float], Tuple[Vector3, Quaternion]]

# Resolution of every emitted timestamp, in nanoseconds
CLOCK_QUANTUM_NS = 1_000


def quantize_ns(ns: float) -> int:
    """Round an instant in nanoseconds to the nearest clock quantum."""
    return int(round(ns / CLOCK_QUANTUM_NS)) * CLOCK_QUANTUM_NS


@dataclass(frozen=True)
class VisionSourceConfig:
    nominal_rate_hz: float = 100.0
    jitter_std_ms: float = 0.0
    drop_prob: float = 0.0
    gap_schedule: Tuple[Tuple[float, float], ...] = ()
    seed: int = 0
    active_window: Optional[Tuple[float, float]] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.nominal_rate_hz) and self.nominal_rate_hz > 0):
            raise ValueError(f"nominal_rate_hz must be positive, got {self.nominal_rate_hz}")
        if self.jitter_std_ms < 0:
            raise ValueError("jitter_std_ms must not be negative.")
        if not 0.0 <= self.drop_prob < 1.0:
            raise ValueError(f"drop_prob must be within [0, 1), got {self.drop_prob}")
        if self.seed < 0:
            raise ValueError("seed must be unsigned.")

        gaps = tuple((float(start), float(duration)) for start, duration in self.gap_schedule)
        for start, duration in gaps:
            if duration <= 0:
                raise ValueError(f"Gap at {start} s has non-positive duration {duration}.")
        for (start, duration), (next_start, _) in zip(gaps, gaps[1:]):
            if next_start < start + duration:
                raise ValueError("Gap windows must be sorted and non-overlapping.")
        object.__setattr__(self, "gap_schedule", gaps)

        if self.active_window is not None:
            start, end = (float(v) for v in self.active_window)
            if end <= start:
                raise ValueError("active_window must end after it starts.")
            object.__setattr__(self, "active_window", (start, end))

    @classmethod
    def from_dict(cls, data: dict) -> "VisionSourceConfig":
        window = data.get("active_window")
        return cls(
            nominal_rate_hz=float(data.get("nominal_rate_hz", 100.0)),
            jitter_std_ms=float(data.get("jitter_std_ms", 0.0)),
            drop_prob=float(data.get("drop_prob", 0.0)),
            gap_schedule=tuple(tuple(gap) for gap in data.get("gap_schedule", ())),
            seed=int(data.get("seed", 0)),
            active_window=tuple(window) if window is not None else None,
        )


class VisionSource:
    """Emits pose samples from ``provider`` on the configured schedule."""

    def __init__(self, config: VisionSourceConfig, provider: PoseProvider):
        self.config = config
        self._provider = provider
        jitter_seq, drop_seq = np.random.SeedSequence(config.seed).spawn(2)
        self._jitter_rng = np.random.default_rng(jitter_seq)
        self._drop_rng = np.random.default_rng(drop_seq)
        self._period_ns = 1e9 / config.nominal_rate_hz
        self._jitter_std_ns = config.jitter_std_ms * 1e6
        self._gaps_ns: List[Tuple[int, int]] = [
            (quantize_ns(seconds_to_ns(start)), quantize_ns(seconds_to_ns(start + duration)))
            for start, duration in config.gap_schedule
        ]
        if config.active_window is None:
            self._anchor_ns, self._end_ns = 0, None
        else:
            self._anchor_ns = quantize_ns(seconds_to_ns(config.active_window[0]))
            self._end_ns = quantize_ns(seconds_to_ns(config.active_window[1]))

        self._k = 0
        self._gap_index = 0
        self._last_planned_ns: Optional[int] = None
        self._resume_ns: Optional[int] = None
        self._next_ns: Optional[int] = None
        self._pinned = False
        self.emitted = 0
        self.dropped = 0
        self._plan()

    @property
    def next_instant_ns(self) -> Optional[int]:
        """The next planned emission instant, or None once the stream has ended."""
        return self._next_ns

    def in_gap(self, now_ns: int) -> bool:
        """True while the source is blocked inside a gap window."""
        for start_ns, end_ns in self._gaps_ns:
            if start_ns < now_ns < end_ns:
                return True
            if start_ns >= now_ns:
                break
        return False

    def _ceiling_ns(self) -> Optional[int]:
        # First boundary a jittered instant must stay below
        bounds = [self._end_ns] if self._end_ns is not None else []
        if self._gap_index < len(self._gaps_ns):
            bounds.append(self._gaps_ns[self._gap_index][0])
        return min(bounds) if bounds else None

    def _plan(self) -> None:
        self._pinned = False
        if self._resume_ns is not None:
            instant, self._resume_ns = self._resume_ns, None
            self._anchor_ns, self._k = instant, 0
            self._pinned = True
        else:
            instant = self._plan_grid()

        if self._end_ns is not None and instant >= self._end_ns:
            self._next_ns = None
            return
        self._last_planned_ns = instant
        self._next_ns = instant

    def _plan_grid(self) -> int:
        lower = (
            self._anchor_ns
            if self._last_planned_ns is None
            else self._last_planned_ns + CLOCK_QUANTUM_NS
        )
        nominal = max(quantize_ns(self._anchor_ns + self._k * self._period_ns), lower)

        while self._gap_index < len(self._gaps_ns):
            start_ns, end_ns = self._gaps_ns[self._gap_index]
            if nominal < start_ns:
                break
            self._gap_index += 1
            if end_ns <= lower:
                continue
            self._pinned = True
            if start_ns >= lower:
                self._resume_ns = end_ns
                logger.debug(
                    "Vision blocked from %.6f s to %.6f s",
                    ns_to_seconds(start_ns),
                    ns_to_seconds(end_ns),
                )
                return start_ns
            # Blocked since before the last sample: resume at the gap end
            self._anchor_ns, self._k = end_ns, 0
            nominal = end_ns

        if self._pinned or self._k == 0 or self._jitter_std_ns <= 0:
            return nominal
        jittered = quantize_ns(nominal + self._jitter_rng.normal(0.0, self._jitter_std_ns))
        ceiling = self._ceiling_ns()
        if ceiling is not None:
            jittered = min(jittered, ceiling - CLOCK_QUANTUM_NS)
        return max(jittered, lower)

    def step(self, now_ns: int) -> Optional[PoseSample]:
        """Emit the sample due at or before ``now_ns``, if any.

        A sample is published with its planned timestamp. Samples on a gap
        boundary are never dropped.
        """
        if self._next_ns is None or now_ns < self._next_ns:
            return None
        instant, pinned = self._next_ns, self._pinned
        self._k += 1
        self._plan()

        if not pinned and self.config.drop_prob > 0:
            if self._drop_rng.random() < self.config.drop_prob:
                self.dropped += 1
                return None

        t = ns_to_seconds(instant)
        position, orientation = self._provider(t)
        self.emitted += 1
        return PoseSample(t=t, position=tuple(position), orientation=tuple(orientation))


def vision_step(source: VisionSource, virtual_now: float) -> Optional[PoseSample]:
    return source.step(seconds_to_ns(virtual_now))
