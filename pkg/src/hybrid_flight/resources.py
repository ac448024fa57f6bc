"""Simulated onboard resource monitor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import ResourceSample


@dataclass(frozen=True)
class ResourceProfile:
    """Baseline levels and noise of the simulated flight computer.

    ``cpu_blocked_pct`` is the CPU level while the perception node is blocked
    on I/O.
    """

    cpu_baseline_pct: float = 15.19
    cpu_noise_pct: float = 2.0
    cpu_blocked_pct: float = 10.1
    mem_baseline_mb: float = 1244.0
    mem_noise_mb: float = 40.0

    def __post_init__(self) -> None:
        for name in ("cpu_baseline_pct", "cpu_blocked_pct"):
            if not 0.0 <= getattr(self, name) <= 100.0:
                raise ValueError(f"{name} must be within [0, 100].")
        if min(self.cpu_noise_pct, self.mem_baseline_mb, self.mem_noise_mb) < 0:
            raise ValueError("Resource levels and noise must not be negative.")

    @classmethod
    def from_dict(cls, data: dict) -> "ResourceProfile":
        return cls(**{key: float(value) for key, value in data.items()})


class ResourceMonitor:
    """Samples CPU, memory and link bandwidth once per period."""

    def __init__(self, profile: ResourceProfile = ResourceProfile(), seed: int = 0):
        self.profile = profile
        self._rng = np.random.default_rng(seed)
        self._last_bytes = 0
        self._last_t = 0.0

    def sample(self, t: float, total_bytes: int, blocked: bool = False) -> ResourceSample:
        """Take one sample.

        Args:
            t: Sample time in seconds.
            total_bytes: Bytes sent over the bridge so far, both directions.
            blocked: Whether the perception node is blocked right now.
        """
        profile = self.profile
        cpu_level = profile.cpu_blocked_pct if blocked else profile.cpu_baseline_pct
        cpu = float(np.clip(self._rng.normal(cpu_level, profile.cpu_noise_pct), 0.0, 100.0))
        mem = max(float(self._rng.normal(profile.mem_baseline_mb, profile.mem_noise_mb)), 0.0)

        window = t - self._last_t
        sent = total_bytes - self._last_bytes
        bandwidth = sent * 8 / 1000.0 / window if window > 0 else 0.0
        self._last_bytes, self._last_t = total_bytes, t
        return ResourceSample(t=t, cpu_pct=cpu, mem_mb=mem, bandwidth_kbps=bandwidth)
