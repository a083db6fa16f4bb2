"""Raw-record model and the gateway CSV export format.

Line format (bit-exact contract): header
``timestamp,node_id,sensor_id,category,parameter,value``, ISO-8601 UTC
timestamps with trailing Z, ``.`` decimal separator, UTF-8, LF endings.
Malformed lines are collected with their line numbers, never dropped
silently.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import IO, Iterable

from ..core import CATEGORIES, MAX_NODE_ID, ParameterKind, Timestamp, kind_for

__all__ = ["RawRecord", "RejectedLine", "CSV_HEADER", "format_record", "serialize_records", "parse_export"]

CSV_HEADER = "timestamp,node_id,sensor_id,category,parameter,value"


@dataclass(frozen=True)
class RawRecord:
    """One sample as acquired: validated for identity, not for value range."""

    timestamp: Timestamp
    node_id: int
    sensor_id: int
    parameter: ParameterKind
    value: float

    @property
    def category(self) -> str:
        return self.parameter.category

    @property
    def acronym(self) -> str:
        return self.parameter.acronym


@dataclass(frozen=True)
class RejectedLine:
    line_no: int
    line: str
    reason: str


def format_record(record: RawRecord) -> str:
    """Single CSV line; ``repr(float)`` keeps the value round-trip exact."""
    return (
        f"{record.timestamp.to_iso()},{record.node_id},{record.sensor_id},"
        f"{record.parameter.category},{record.parameter.acronym},{record.value!r}"
    )


def serialize_records(records: Iterable[RawRecord], header: bool = True) -> str:
    lines = [CSV_HEADER] if header else []
    lines.extend(format_record(r) for r in records)
    return "\n".join(lines) + "\n" if lines else ""


def parse_line(line: str) -> RawRecord:
    """Parse one CSV line; raises ValueError with a reason on any defect."""
    parts = line.split(",")
    if len(parts) != 6:
        raise ValueError(f"expected 6 fields, got {len(parts)}")
    ts_text, node_text, sensor_text, category, acronym, value_text = parts
    timestamp = Timestamp.from_iso(ts_text)
    try:
        node_id = int(node_text)
    except ValueError:
        raise ValueError(f"node_id not an integer: {node_text!r}") from None
    if not 1 <= node_id <= MAX_NODE_ID:
        raise ValueError("node_id out of range")
    try:
        sensor_id = int(sensor_text)
    except ValueError:
        raise ValueError(f"sensor_id not an integer: {sensor_text!r}") from None
    if category not in CATEGORIES:
        raise ValueError(f"unknown category {category!r}")
    try:
        kind = kind_for(acronym, category)
    except KeyError:
        raise ValueError(f"unknown parameter {acronym!r} for category {category!r}") from None
    if kind.category != category:
        raise ValueError(f"parameter {acronym!r} does not belong to category {category!r}")
    try:
        value = float(value_text)
    except ValueError:
        raise ValueError(f"value not a number: {value_text!r}") from None
    return RawRecord(timestamp, node_id, sensor_id, kind, value)


def parse_export(stream: str | IO[str] | Iterable[str]) -> tuple[list[RawRecord], list[RejectedLine]]:
    """Parse a gateway export; well-formed lines become records, the rest are
    returned as rejects with line numbers.  An optional header line and blank
    lines are skipped; a stream end marker ``#END`` is tolerated."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    records: list[RawRecord] = []
    rejects: list[RejectedLine] = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line == "#END":
            continue
        if line_no == 1 and line == CSV_HEADER:
            continue
        try:
            records.append(parse_line(line))
        except ValueError as exc:
            rejects.append(RejectedLine(line_no, line, str(exc)))
    return records, rejects
