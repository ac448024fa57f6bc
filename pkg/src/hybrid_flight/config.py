"""Mission configuration documents."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .exceptions import BadConfig, InvalidCommand, UnknownMode
from .models import OPCODE_NAMES, Command, Opcode, parse_mode
from .resources import ResourceProfile
from .trajectory import Trajectory
from .vision import VisionSourceConfig

logger = logging.getLogger(__name__)

# key: (accepted types, required)
MISSION_KEYS = {
    "seed": (int, True),
    "duration_s": ((int, float), True),
    "vision": (dict, True),
    "trajectory": ((dict, type(None)), True),
    "command_script": (list, True),
    "rate_groups": (list, True),
    "output_dir": (str, True),
    "transport": (dict, False),
    "autopilot": (dict, False),
    "resources": (dict, False),
    "active_window": ((list, type(None)), False),
}


@dataclass(frozen=True)
class TransportConfig:
    """Channel effects of the simulated bridge transport."""

    loss_prob: float = 0.0
    reorder_prob: float = 0.0
    delay_ms: float = 0.0
    reorder_hold_ms: float = 20.0

    def options(self) -> Dict[str, float]:
        return {
            "loss_prob": self.loss_prob,
            "reorder_prob": self.reorder_prob,
            "delay_ms": self.delay_ms,
            "reorder_hold_ms": self.reorder_hold_ms,
        }


@dataclass(frozen=True)
class AutopilotConfig:
    tracking_gain: float = 1.0
    attitude_noise_deg: float = 10.0


@dataclass(frozen=True)
class MissionConfig:
    seed: int
    duration_s: float
    vision: VisionSourceConfig
    trajectory: Optional[Trajectory]
    command_script: Tuple[Command, ...]
    rate_groups: Tuple[int, ...]
    output_dir: Path
    transport: TransportConfig = field(default_factory=TransportConfig)
    autopilot: AutopilotConfig = field(default_factory=AutopilotConfig)
    resources: ResourceProfile = field(default_factory=ResourceProfile)
    active_window: Optional[Tuple[float, float]] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MissionConfig":
        """Build and validate a mission config.

        Raises:
            BadConfig: Naming the offending key when a key is missing, unknown,
                mistyped or violates an invariant.
        """
        if not isinstance(data, dict):
            raise BadConfig("A mission config must be a JSON object.")

        missing = sorted(k for k, (_, required) in MISSION_KEYS.items() if required and k not in data)
        if missing:
            raise BadConfig(f"Missing required key(s): {', '.join(missing)}")
        unknown = sorted(set(data) - set(MISSION_KEYS))
        if unknown:
            raise BadConfig(f"Unknown key(s): {', '.join(unknown)}")

        for key, value in data.items():
            expected, _ = MISSION_KEYS[key]
            if not isinstance(value, expected) or isinstance(value, bool):
                raise BadConfig(f"Key {key!r} has the wrong type ({type(value).__name__}).")

        seed, duration = data["seed"], float(data["duration_s"])
        if seed < 0:
            raise BadConfig("Key 'seed' must be unsigned.")
        if not (math.isfinite(duration) and duration > 0):
            raise BadConfig("Key 'duration_s' must be positive.")

        vision = _section("vision", lambda d: VisionSourceConfig.from_dict({"seed": seed, **d}), data)
        trajectory = None
        if data["trajectory"] is not None:
            trajectory = _section("trajectory", _trajectory, data)
            if trajectory.start_s > 0 or trajectory.end_s < duration:
                raise BadConfig("Key 'trajectory' must cover [0, duration_s].")

        rate_groups = data["rate_groups"]
        if not rate_groups or not all(
            isinstance(p, int) and not isinstance(p, bool) and p > 0 for p in rate_groups
        ):
            raise BadConfig("Key 'rate_groups' must be a non-empty list of positive ms periods.")

        window = data.get("active_window")
        if window is not None:
            if len(window) != 2 or not window[0] < window[1]:
                raise BadConfig("Key 'active_window' must be [start_s, end_s] with start < end.")
            window = (float(window[0]), float(window[1]))

        return cls(
            seed=seed,
            duration_s=duration,
            vision=vision,
            trajectory=trajectory,
            command_script=tuple(_commands(data["command_script"], duration)),
            rate_groups=tuple(rate_groups),
            output_dir=Path(data["output_dir"]),
            transport=_section("transport", lambda d: TransportConfig(**d), data, {}),
            autopilot=_section("autopilot", lambda d: AutopilotConfig(**d), data, {}),
            resources=_section("resources", ResourceProfile.from_dict, data, {}),
            active_window=window,
        )


def _section(key: str, build, data: Dict[str, Any], default: Any = None):
    value = data.get(key, default)
    try:
        return build(value)
    except (TypeError, ValueError, KeyError) as e:
        raise BadConfig(f"Key {key!r} is invalid: {e}") from None


def _trajectory(data: Dict[str, Any]) -> Trajectory:
    return Trajectory.from_dicts(data["segments"], data.get("initial_position"))


def _command_args(opcode: Opcode, args: List[Any]) -> Tuple[float, ...]:
    if opcode == Opcode.SET_MODE and len(args) == 1 and isinstance(args[0], str):
        return (float(parse_mode(args[0]).code),)
    return tuple(float(a) for a in args)


def _commands(script: List[Any], duration: float) -> List[Command]:
    """Scripted commands, numbered from 1 in script order."""
    commands = []
    for number, entry in enumerate(script, start=1):
        where = f"command_script[{number - 1}]"
        if not isinstance(entry, dict) or set(entry) - {"t", "opcode", "args"} or "t" not in entry:
            raise BadConfig(f"Key {where!r} must be an object with t, opcode and args.")
        t = entry["t"]
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not 0 <= t <= duration:
            raise BadConfig(f"Key {where!r} has a time outside [0, duration_s].")
        if entry.get("opcode") not in OPCODE_NAMES:
            raise BadConfig(f"Key {where!r} has unknown opcode {entry.get('opcode')!r}.")
        opcode = OPCODE_NAMES[entry["opcode"]]
        try:
            args = _command_args(opcode, list(entry.get("args", [])))
            commands.append(Command(id=number, opcode=opcode, args=args, issued_at=float(t)))
        except (InvalidCommand, UnknownMode, TypeError, ValueError) as e:
            raise BadConfig(f"Key {where!r} is invalid: {e}") from None
    return commands


def load_mission_config(path: Union[str, Path]) -> MissionConfig:
    """Read and validate a JSON mission config.

    Raises:
        BadConfig: If the file is unreadable, not JSON or invalid.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise BadConfig(f"Unable to read mission config {path}: {e}") from None
    except ValueError as e:
        raise BadConfig(f"Mission config {path} is not valid JSON: {e}") from None
    config = MissionConfig.from_dict(data)
    logger.info("Loaded mission config %s (seed=%d)", path, config.seed)
    return config
