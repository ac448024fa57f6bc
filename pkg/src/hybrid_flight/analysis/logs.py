"""CSV log schemas: loaders with line-numbered diagnostics, and writers.

Loaders read through pandas with every cell kept as text, then validate row by
row. Line numbers are 1-based file lines; the header is line 1. Writers emit
times with six fixed decimals.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..exceptions import (
    AnalysisError,
    DuplicateTimestamp,
    EmptyLog,
    MalformedRow,
    NonFinite,
    NonUnitQuaternion,
    UnknownMode,
)
from ..models import (
    QUATERNION_TOLERANCE,
    AckStatus,
    HealthStatus,
    MissionEntry,
    PoseSample,
    ResourceSample,
    parse_mode,
    validate_pose,
)

logger = logging.getLogger(__name__)

Source = Union[str, "os.PathLike[str]", IO[str]]

VISION_COLUMNS = ("t", "x", "y", "z", "qx", "qy", "qz", "qw")
MISSION_COLUMNS = ("t", "mode", "health", "ack_cmd_id", "ack_status")
RESOURCE_COLUMNS = ("t", "cpu_pct", "mem_mb", "bandwidth_kbps")
BRIDGE_STATS_KEYS = ("freshness_pct", "endpoints", "dispatcher")
DISPATCHER_KEYS = ("sent", "succeeded", "rejected", "timed_out", "success_rate_pct")

# Text that parses as NaN and is reported as non-finite rather than non-numeric
NAN_SPELLINGS = ("nan", "+nan", "-nan")

_PARSER_LINE = re.compile(r"line (\d+)")


@dataclass(frozen=True, eq=False)
class VisionLog:
    """Pose samples as column arrays, strictly increasing in time.

    ``origin_s`` is the raw timestamp that was subtracted on load.
    """

    t: np.ndarray
    positions: np.ndarray
    orientations: np.ndarray
    origin_s: float = 0.0

    def __post_init__(self) -> None:
        n = len(self.t)
        if self.positions.shape != (n, 3) or self.orientations.shape != (n, 4):
            raise ValueError("Vision log columns disagree in length.")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("Vision log timestamps must be strictly increasing.")

    @classmethod
    def from_arrays(
        cls, t: Sequence[float], positions: Sequence, orientations: Optional[Sequence] = None
    ) -> "VisionLog":
        """Build a log from raw arrays; orientations default to identity."""
        t = np.asarray(t, dtype=float)
        if orientations is None:
            orientations = np.tile([0.0, 0.0, 0.0, 1.0], (len(t), 1))
        return cls(
            t=t,
            positions=np.asarray(positions, dtype=float).reshape(-1, 3),
            orientations=np.asarray(orientations, dtype=float).reshape(-1, 4),
        )

    def __len__(self) -> int:
        return len(self.t)

    @property
    def samples(self) -> List[PoseSample]:
        return [
            PoseSample(float(t), tuple(p), tuple(q))
            for t, p, q in zip(self.t, self.positions.tolist(), self.orientations.tolist())
        ]

    @property
    def duration_s(self) -> float:
        return float(self.t[-1] - self.t[0]) if len(self) else 0.0


@dataclass(frozen=True)
class MissionLog:
    entries: List[MissionEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        times = [e.t for e in self.entries]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("Mission log timestamps must be non-decreasing.")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def acks(self) -> List[Tuple[int, AckStatus]]:
        return [e.last_ack for e in self.entries if e.last_ack is not None]


@dataclass(frozen=True)
class ResourceLog:
    samples: List[ResourceSample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.samples)


def _source_name(source: Source) -> Optional[str]:
    if hasattr(source, "read"):
        return getattr(source, "name", None)
    return str(source)


def _read_table(source: Source, columns: Sequence[str]) -> Tuple[pd.DataFrame, Optional[str]]:
    """Read a log as text cells indexed by file line, header checked and blank rows dropped.

    Every cell stays a string; a short row is padded with NaN.
    """
    name = _source_name(source)
    try:
        frame = pd.read_csv(
            source,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise EmptyLog(f"{name or 'log'} is empty.") from None
    except pd.errors.ParserError as e:
        match = _PARSER_LINE.search(str(e))
        line = int(match.group(1)) if match else 0
        raise MalformedRow(line, f"more than {len(columns)} fields", name) from None

    frame.index = frame.index + 1
    header = [str(cell).strip() for cell in frame.iloc[0].fillna("")]
    if header != list(columns):
        raise MalformedRow(1, f"expected header {','.join(columns)}", name)

    body = frame.iloc[1:]
    if not body.empty:
        text = body.fillna("").apply(lambda column: column.str.strip())
        body = body[(text != "").any(axis=1)]
    return body.set_axis(list(columns), axis=1), name


def _check_width(body: pd.DataFrame, low: int, high: int, name: Optional[str]) -> None:
    counts = body.notna().sum(axis=1)
    bad = (counts < low) | (counts > high)
    if bad.any():
        line = bad.idxmax()
        expected = str(low) if low == high else f"{low} to {high}"
        raise MalformedRow(int(line), f"expected {expected} fields, got {counts[line]}", name)


def _numbers(body: pd.DataFrame, columns: Sequence[str], name: Optional[str]) -> pd.DataFrame:
    """Parse ``columns`` as floats, reporting the first unparseable cell by line."""
    text = body[list(columns)].fillna("").apply(lambda column: column.str.strip())
    parsed = text.apply(pd.to_numeric, errors="coerce").astype(float)
    bad = parsed.isna() & ~text.apply(lambda column: column.str.lower().isin(NAN_SPELLINGS))
    rows = bad.any(axis=1)
    if rows.any():
        line = rows.idxmax()
        column = bad.loc[line].idxmax()
        raise MalformedRow(
            int(line), f"{column} is not a number: {text.at[line, column]!r}", name
        )
    return parsed


def load_vision_log(source: Source) -> VisionLog:
    """Load ``vision_pose_log.csv``.

    Rows are sorted by time and timestamps are shifted so the first sample is
    at t = 0.

    Raises:
        MalformedRow: If a row has the wrong field count, a non-numeric field,
            a non-finite value or a non-unit quaternion.
        DuplicateTimestamp: If two rows share a timestamp.
        EmptyLog: If there are no data rows.
    """
    body, name = _read_table(source, VISION_COLUMNS)
    if body.empty:
        raise EmptyLog(f"{name or 'Vision log'} has no samples.")
    _check_width(body, len(VISION_COLUMNS), len(VISION_COLUMNS), name)
    numbers = _numbers(body, VISION_COLUMNS, name)
    data = numbers.to_numpy()
    lines = numbers.index.to_numpy()

    norms = np.linalg.norm(data[:, 4:], axis=1)
    suspect = ~np.isfinite(data).all(axis=1) | ~(np.abs(norms - 1.0) <= QUATERNION_TOLERANCE)
    for line, values in zip(lines[suspect], data[suspect]):
        try:
            validate_pose(PoseSample(values[0], tuple(values[1:4]), tuple(values[4:])))
        except (NonFinite, NonUnitQuaternion) as e:
            raise MalformedRow(int(line), str(e), name) from None

    order = np.argsort(data[:, 0], kind="stable")
    data, lines = data[order], lines[order]
    repeats = np.flatnonzero(np.diff(data[:, 0]) == 0)
    if repeats.size:
        i = repeats[0] + 1
        raise DuplicateTimestamp(int(lines[i]), f"t={float(data[i, 0])!r}", name)

    origin = float(data[0, 0])
    logger.info("Loaded %d vision samples from %s", len(data), name or "stream")
    return VisionLog(
        t=data[:, 0] - origin,
        positions=data[:, 1:4],
        orientations=data[:, 4:],
        origin_s=origin,
    )


def _mission_entry(fields: List[str], line: int, name: Optional[str]) -> MissionEntry:
    fields = fields + [""] * (len(MISSION_COLUMNS) - len(fields))
    try:
        t = float(fields[0])
    except ValueError:
        raise MalformedRow(line, f"t is not a number: {fields[0]!r}", name) from None
    if not math.isfinite(t):
        raise MalformedRow(line, "t is not finite", name)
    try:
        mode = parse_mode(fields[1].strip())
    except UnknownMode as e:
        raise MalformedRow(line, str(e), name) from None
    try:
        health = HealthStatus[fields[2].strip()]
    except KeyError:
        raise MalformedRow(line, f"unknown health {fields[2]!r}", name) from None

    ack_id, ack_status = fields[3].strip(), fields[4].strip()
    if not ack_id and not ack_status:
        return MissionEntry(t, mode, health, None)
    try:
        return MissionEntry(t, mode, health, (int(ack_id), AckStatus[ack_status]))
    except (ValueError, KeyError):
        raise MalformedRow(
            line, f"bad acknowledgment {ack_id!r},{ack_status!r}", name
        ) from None


def load_mission_log(source: Source) -> MissionLog:
    """Load ``mission_log.csv``, sorted by time.

    Raises:
        MalformedRow: On a bad field count, time, mode, health or ack.
        EmptyLog: If there are no data rows.
    """
    body, name = _read_table(source, MISSION_COLUMNS)
    if body.empty:
        raise EmptyLog(f"{name or 'Mission log'} has no entries.")
    _check_width(body, 3, len(MISSION_COLUMNS), name)
    entries = [
        _mission_entry([cell for cell in row if isinstance(cell, str)], int(line), name)
        for line, row in zip(body.index, body.itertuples(index=False, name=None))
    ]
    entries.sort(key=lambda e: e.t)
    return MissionLog(entries)


def load_resource_log(source: Source) -> ResourceLog:
    body, name = _read_table(source, RESOURCE_COLUMNS)
    if body.empty:
        raise EmptyLog(f"{name or 'Resource log'} has no samples.")
    _check_width(body, len(RESOURCE_COLUMNS), len(RESOURCE_COLUMNS), name)
    numbers = _numbers(body, RESOURCE_COLUMNS, name)
    samples = []
    for line, values in zip(numbers.index, numbers.itertuples(index=False, name=None)):
        try:
            samples.append(ResourceSample(*values))
        except ValueError as e:
            raise MalformedRow(int(line), str(e), name) from None
    samples.sort(key=lambda s: s.t)
    return ResourceLog(samples)


# Writers


def format_time(t: float) -> str:
    """Seconds with six fixed decimals, the resolution of every logged clock."""
    return f"{t:.6f}"


def format_float(value: float) -> str:
    """Shortest round-tripping plain decimal."""
    return np.format_float_positional(value, trim="-")


def _write(path: Union[str, Path], columns: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    logger.info("Wrote %s", path)


def write_vision_log(path: Union[str, Path], samples: Iterable[PoseSample]) -> None:
    _write(
        path,
        VISION_COLUMNS,
        (
            [format_time(s.t)] + [format_float(v) for v in (*s.position, *s.orientation)]
            for s in samples
        ),
    )


def write_mission_log(path: Union[str, Path], entries: Iterable[MissionEntry]) -> None:
    def row(entry: MissionEntry) -> List[str]:
        ack_id, ack_status = ("", "") if entry.last_ack is None else (
            str(entry.last_ack[0]),
            AckStatus(entry.last_ack[1]).name,
        )
        return [format_time(entry.t), entry.mode.value, entry.health.name, ack_id, ack_status]

    _write(path, MISSION_COLUMNS, (row(e) for e in entries))


def write_resource_log(path: Union[str, Path], samples: Iterable[ResourceSample]) -> None:
    _write(
        path,
        RESOURCE_COLUMNS,
        (
            [format_time(s.t), format_float(s.cpu_pct), format_float(s.mem_mb),
             format_float(s.bandwidth_kbps)]
            for s in samples
        ),
    )


def load_bridge_stats(source: Union[str, Path]) -> dict:
    """Load the ``bridge_stats.json`` document written by ``simulate``.

    Raises:
        AnalysisError: If the document is not JSON or misses a required key.
    """
    try:
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    except ValueError as e:
        raise AnalysisError(f"{source}: not a JSON document ({e})") from None
    missing = [key for key in BRIDGE_STATS_KEYS if key not in data]
    if missing:
        raise AnalysisError(f"{source}: missing keys {', '.join(missing)}")
    dispatcher_missing = [k for k in DISPATCHER_KEYS if k not in data["dispatcher"]]
    if dispatcher_missing:
        raise AnalysisError(
            f"{source}: dispatcher misses keys {', '.join(dispatcher_missing)}"
        )
    return data
