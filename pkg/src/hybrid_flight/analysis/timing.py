"""Inter-sample timing: interval statistics, dropouts, continuity and rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import EmptyWindow, TooFewSamples
from ..models import FlightMode
from .logs import VisionLog

DROPOUT_FACTOR = 2.0


@dataclass(frozen=True, eq=False)
class IntervalSeries:
    """Intervals between consecutive samples in ms.

    ``end_times[i]`` is the time in seconds of the sample closing ``dts[i]``.
    """

    dts: np.ndarray
    end_times: np.ndarray

    @classmethod
    def from_times(cls, t: Sequence[float]) -> "IntervalSeries":
        t = np.asarray(t, dtype=float)
        if len(t) < 2:
            raise TooFewSamples(f"Interval statistics need 2 samples, got {len(t)}.")
        return cls(dts=np.diff(t) * 1000.0, end_times=t[1:])

    @classmethod
    def from_intervals(cls, dts_ms: Sequence[float], start_s: float = 0.0) -> "IntervalSeries":
        dts = np.asarray(dts_ms, dtype=float)
        if len(dts) == 0:
            raise TooFewSamples("An interval series needs at least one interval.")
        return cls(dts=dts, end_times=start_s + np.cumsum(dts) / 1000.0)

    def __len__(self) -> int:
        return len(self.dts)

    @property
    def mu(self) -> float:
        return float(np.mean(self.dts))

    @property
    def sigma(self) -> float:
        return float(np.std(self.dts))


@dataclass(frozen=True)
class TimingMetrics:
    mean: float
    median: float
    std: float
    min: float
    max: float
    p95: float
    p99: float

    def to_dict(self) -> dict:
        return {
            "mean_ms": self.mean,
            "median_ms": self.median,
            "std_ms": self.std,
            "min_ms": self.min,
            "max_ms": self.max,
            "p95_ms": self.p95,
            "p99_ms": self.p99,
        }


@dataclass(frozen=True)
class GapRecord:
    """An interval flagged as a dropout.

    ``index`` is the position of the closing sample in the vision log. The
    phase and motion fields are filled in once a mission log and positions
    are joined.
    """

    t: float
    gap_ms: float
    effective_hz: float
    index: int
    phase: Optional[FlightMode] = None
    displacement_m: Optional[float] = None
    speed_mps: Optional[float] = None
    nearest_transition_s: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "gap_ms": self.gap_ms,
            "effective_hz": self.effective_hz,
            "phase": self.phase.value if self.phase is not None else "UNKNOWN",
            "displacement_m": self.displacement_m,
            "speed_mps": self.speed_mps,
            "nearest_transition_s": self.nearest_transition_s,
        }


@dataclass(frozen=True)
class LatencyHistogram:
    """Fixed 1 ms bins over [0, max_ms) plus one overflow bin [max_ms, inf)."""

    max_ms: int
    counts: Tuple[int, ...]

    @property
    def edges(self) -> List[Tuple[float, float]]:
        edges = [(float(i), float(i + 1)) for i in range(self.max_ms)]
        return edges + [(float(self.max_ms), math.inf)]

    def mass(self, start_ms: int, end_ms: int) -> float:
        """Fraction of intervals in [start_ms, end_ms)."""
        total = sum(self.counts)
        return sum(self.counts[start_ms:end_ms]) / total if total else 0.0

    def to_dict(self) -> dict:
        return {
            "bin_width_ms": 1,
            "max_ms": self.max_ms,
            "counts": list(self.counts),
        }


def nearest_rank(sorted_values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile: the value at rank ceil(p/100 * n)."""
    n = len(sorted_values)
    if n == 0:
        raise TooFewSamples("A percentile needs at least one value.")
    rank = math.ceil(Fraction(p) * n / 100)
    return float(sorted_values[min(max(rank, 1), n) - 1])


def interval_metrics(series: IntervalSeries) -> TimingMetrics:
    ordered = np.sort(series.dts)
    return TimingMetrics(
        mean=series.mu,
        median=float(np.median(ordered)),
        std=series.sigma,
        min=float(ordered[0]),
        max=float(ordered[-1]),
        p95=nearest_rank(ordered, 95),
        p99=nearest_rank(ordered, 99),
    )


def timing_metrics(log: VisionLog) -> Tuple[IntervalSeries, TimingMetrics]:
    """Interval statistics of a vision log.

    Raises:
        TooFewSamples: With fewer than 2 samples.
    """
    series = IntervalSeries.from_times(log.t)
    return series, interval_metrics(series)


def detect_dropouts(
    series: IntervalSeries, threshold_ms: Optional[float] = None
) -> List[GapRecord]:
    """Flag every interval above the threshold, largest first.

    Args:
        series: The interval series.
        threshold_ms: Absolute threshold; defaults to twice the mean interval.

    Returns:
        Gap records sorted by descending ``gap_ms`` (ties by time).
    """
    limit = DROPOUT_FACTOR * series.mu if threshold_ms is None else threshold_ms
    gaps = [
        GapRecord(
            t=float(series.end_times[i]),
            gap_ms=float(series.dts[i]),
            effective_hz=1000.0 / float(series.dts[i]),
            index=int(i) + 1,
        )
        for i in np.flatnonzero(series.dts > limit)
    ]
    return sorted(gaps, key=lambda g: (-g.gap_ms, g.t))


def resolve_window(
    log: VisionLog, active_window: Optional[Tuple[float, float]] = None
) -> Tuple[float, float]:
    if active_window is None:
        return float(log.t[0]), float(log.t[-1])
    return float(active_window[0]), float(active_window[1])


def continuity_and_rate(
    log: VisionLog,
    gaps: Sequence[GapRecord],
    active_window: Optional[Tuple[float, float]] = None,
) -> Tuple[float, float]:
    """Continuity percentage and effective sample rate.

    Args:
        log: The vision log.
        gaps: Dropouts found in the log.
        active_window: ``(t0, t1)`` in log seconds; defaults to the first and
            last sample times.

    Raises:
        EmptyWindow: If the window has no duration or holds no samples.
    """
    t0, t1 = resolve_window(log, active_window)
    if t1 <= t0:
        raise EmptyWindow(f"Active window [{t0}, {t1}] has no duration.")
    in_window = int(np.count_nonzero((log.t >= t0) & (log.t <= t1)))
    if in_window == 0:
        raise EmptyWindow(f"No samples inside the active window [{t0}, {t1}].")
    continuity = 100.0 * (1.0 - len(gaps) / len(log))
    return continuity, in_window / (t1 - t0)


def latency_histogram(series: IntervalSeries, max_ms: int = 50) -> LatencyHistogram:
    bins = np.minimum(np.floor(series.dts).astype(np.int64), max_ms)
    counts = np.bincount(bins, minlength=max_ms + 1)
    return LatencyHistogram(max_ms=max_ms, counts=tuple(int(c) for c in counts))
