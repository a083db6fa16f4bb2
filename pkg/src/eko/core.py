"""Shared domain types: parameter catalogue, timestamps, series, blocks.

Everything downstream (ingestion, preprocessing, identification, prediction)
operates on the immutable value types defined here.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

__all__ = [
    "MISSING",
    "Category",
    "ParameterKind",
    "CATALOGUE",
    "Timestamp",
    "TimeSeries",
    "Channel",
    "NetworkTopology",
    "DataBlock",
    "validate_value",
    "block_code",
    "parse_block_code",
    "validate_topology",
    "kind_for",
]

#: Marker for a missing sample inside a float series.  NaN lies outside every
#: physical parameter range, so it can never collide with a real value.
MISSING = math.nan

MAX_NODE_ID = 6
MAX_SENSORS_PER_NODE = 4
MAX_PARAMS_PER_SENSOR = 3

Category = str  # one of "soil", "leaves", "ambient"
BLOCK_CATEGORIES = ("soil", "ambient")
CATEGORIES = ("soil", "leaves", "ambient")


@dataclass(frozen=True)
class ParameterKind:
    """One entry of the physical parameter catalogue.

    ``key`` is globally unique; ``acronym`` is the short label used in block
    codes and exports (the two temperature kinds share the acronym ``Te`` and
    are told apart by ``category``).
    """

    key: str
    acronym: str
    category: Category
    unit: str
    range_min: float
    range_max: float

    def __post_init__(self) -> None:
        if not self.range_min < self.range_max:
            raise ValueError(f"{self.key}: range_min must be < range_max")


CATALOGUE: tuple[ParameterKind, ...] = (
    ParameterKind("mo", "Mo", "soil", "cbar", 0.0, 240.0),
    ParameterKind("te_soil", "Te", "soil", "degC", -40.0, 65.0),
    ParameterKind("waco", "WaCo", "soil", "% wfv", 0.0, 100.0),
    ParameterKind("lewe", "LeWe", "leaves", "CntS", 0.0, 1024.0),
    ParameterKind("hu", "Hu", "ambient", "%", 0.0, 100.0),
    ParameterKind("te_amb", "Te", "ambient", "degC", -40.0, 65.0),
    ParameterKind("dwpo", "DwPo", "ambient", "degC", -10.0, 50.0),
    ParameterKind("sora", "SoRa", "ambient", "W/m2", 0.0, 1800.0),
)

_BY_KEY = {k.key: k for k in CATALOGUE}
_BY_CAT_ACRONYM = {(k.category, k.acronym): k for k in CATALOGUE}
# Acronyms that identify a kind without a category ("Te" is ambiguous).
_UNIQUE_ACRONYM = {
    acr: kinds[0]
    for acr, kinds in {
        a: [k for k in CATALOGUE if k.acronym == a] for a in {k.acronym for k in CATALOGUE}
    }.items()
    if len(kinds) == 1
}


def kind_for(acronym: str, category: str | None = None) -> ParameterKind:
    """Resolve an acronym (optionally disambiguated by category) to a kind.

    ``Te`` requires a category.  For block-level lookups the block category
    (soil/ambient) is used; other acronyms are globally unique, so a kind from
    a different category (e.g. ``LeWe``) may legitimately appear in a soil
    block.
    """
    if category is not None and (category, acronym) in _BY_CAT_ACRONYM:
        return _BY_CAT_ACRONYM[(category, acronym)]
    if acronym in _UNIQUE_ACRONYM:
        return _UNIQUE_ACRONYM[acronym]
    raise KeyError(f"unknown or ambiguous parameter acronym {acronym!r} (category={category!r})")


def validate_value(kind: ParameterKind, value: float) -> bool:
    """True iff ``value`` lies inside the kind's physical range (inclusive)."""
    return bool(kind.range_min <= value <= kind.range_max) and math.isfinite(value)


_ISO_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2}):(\d{2})(?:\.\d+)?(Z|\+00:00)$")


@dataclass(frozen=True, order=True)
class Timestamp:
    """UTC instant with exact one-second resolution."""

    epoch_seconds: int

    @classmethod
    def from_iso(cls, text: str) -> "Timestamp":
        m = _ISO_RE.match(text.strip())
        if not m:
            raise ValueError(f"not an ISO-8601 UTC timestamp: {text!r}")
        y, mo, d, h, mi, s = (int(g) for g in m.groups()[:6])
        dt = datetime(y, mo, d, h, mi, s, tzinfo=timezone.utc)
        return cls(int(dt.timestamp()))

    @classmethod
    def from_datetime(cls, dt: datetime) -> "Timestamp":
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return cls(int(dt.timestamp()))

    def to_iso(self) -> str:
        dt = datetime.fromtimestamp(self.epoch_seconds, tz=timezone.utc)
        return dt.strftime("%Y-%m-%dT%H:%M:%SZ")

    def floor_hour(self) -> "Timestamp":
        return Timestamp(self.epoch_seconds - self.epoch_seconds % 3600)

    def __add__(self, seconds: int) -> "Timestamp":
        return Timestamp(self.epoch_seconds + int(seconds))

    def __sub__(self, other: "Timestamp | int") -> "int | Timestamp":
        if isinstance(other, Timestamp):
            return self.epoch_seconds - other.epoch_seconds
        return Timestamp(self.epoch_seconds - int(other))

    def __str__(self) -> str:
        return self.to_iso()


class TimeSeries:
    """Uniformly sampled scalar series with NaN marking missing samples.

    Sample ``k`` corresponds to ``start + k * step_seconds`` exactly.  The
    value buffer is read-only; all operations return new series.
    """

    __slots__ = ("start", "step_seconds", "values")

    def __init__(self, start: Timestamp, step_seconds: int, values) -> None:
        if step_seconds <= 0:
            raise ValueError("step_seconds must be > 0")
        arr = np.asarray(values, dtype=np.float64).copy()
        if arr.ndim != 1:
            raise ValueError("values must be one-dimensional")
        arr.flags.writeable = False
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "step_seconds", int(step_seconds))
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("TimeSeries is immutable")

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.start == other.start
            and self.step_seconds == other.step_seconds
            and len(self) == len(other)
            and bool(np.array_equal(self.values, other.values, equal_nan=True))
        )

    def time_at(self, index: int) -> Timestamp:
        return self.start + index * self.step_seconds

    @property
    def end(self) -> Timestamp:
        """Instant of the last sample (undefined for empty series)."""
        return self.time_at(len(self) - 1)

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def is_complete(self) -> bool:
        return not bool(np.isnan(self.values).any())

    def require_complete(self, what: str = "series") -> np.ndarray:
        if not self.is_complete:
            raise ValueError(f"{what} contains missing samples")
        return self.values

    def with_values(self, values) -> "TimeSeries":
        """Same grid, new value buffer."""
        out = TimeSeries(self.start, self.step_seconds, values)
        if len(out) != len(self):
            raise ValueError("with_values must preserve length")
        return out

    def slice(self, lo: int, hi: int) -> "TimeSeries":
        if not (0 <= lo <= hi <= len(self)):
            raise IndexError(f"slice [{lo}:{hi}] out of range for length {len(self)}")
        return TimeSeries(self.time_at(lo), self.step_seconds, self.values[lo:hi])

    def __repr__(self) -> str:
        return (
            f"TimeSeries(start={self.start}, step={self.step_seconds}s, "
            f"n={len(self)}, missing={int(np.isnan(self.values).sum())})"
        )


@dataclass(frozen=True)
class Channel:
    """One acquisition channel: (node, sensor, parameter)."""

    node_id: int
    sensor_id: int
    parameter: ParameterKind

    def __post_init__(self) -> None:
        if not 1 <= self.node_id <= MAX_NODE_ID:
            raise ValueError(f"node_id {self.node_id} outside 1..{MAX_NODE_ID}")

    @property
    def label(self) -> str:
        """Filename-safe channel identifier."""
        return f"s{self.sensor_id}-{self.parameter.category}-{self.parameter.acronym}"


@dataclass(frozen=True)
class TopologyViolation:
    node_id: int
    sensor_id: int | None
    message: str

    def __str__(self) -> str:
        where = f"node {self.node_id}" + (f", sensor {self.sensor_id}" if self.sensor_id is not None else "")
        return f"{where}: {self.message}"


@dataclass(frozen=True)
class NetworkTopology:
    """Node -> sensor -> measured parameter kinds.

    Maps are stored as plain dicts but treated as immutable; construction of
    invalid topologies is allowed so that :func:`validate_topology` can report
    every violation instead of failing fast.
    """

    nodes: dict[int, dict[int, tuple[ParameterKind, ...]]] = field(default_factory=dict)

    def channels(self) -> list[Channel]:
        out = []
        for node_id in sorted(self.nodes):
            for sensor_id in sorted(self.nodes[node_id]):
                for kind in self.nodes[node_id][sensor_id]:
                    out.append(Channel(node_id, sensor_id, kind))
        return out

    def provides(self, node_id: int, kind: ParameterKind) -> bool:
        for kinds in self.nodes.get(node_id, {}).values():
            if kind in kinds:
                return True
        return False


def validate_topology(topology: NetworkTopology) -> list[TopologyViolation]:
    """Check node/sensor limits; an empty report means the topology is valid."""
    report: list[TopologyViolation] = []
    for node_id, sensors in sorted(topology.nodes.items()):
        if not 1 <= node_id <= MAX_NODE_ID:
            report.append(TopologyViolation(node_id, None, f"node_id outside 1..{MAX_NODE_ID}"))
        if len(sensors) > MAX_SENSORS_PER_NODE:
            report.append(
                TopologyViolation(node_id, None, f"{len(sensors)} sensors exceed limit {MAX_SENSORS_PER_NODE}")
            )
        for sensor_id, kinds in sorted(sensors.items()):
            if not 1 <= len(kinds) <= MAX_PARAMS_PER_SENSOR:
                report.append(
                    TopologyViolation(
                        node_id,
                        sensor_id,
                        f"measures {len(kinds)} parameters, allowed 1..{MAX_PARAMS_PER_SENSOR}",
                    )
                )
            if len(set(kinds)) != len(kinds):
                report.append(TopologyViolation(node_id, sensor_id, "duplicate parameter kinds"))
    return report


_CODE_RE = re.compile(r"^N([1-9]\d*)-(soil|ambient)((?:-[A-Za-z]+)+)$")


def block_code(node_id: int, category: Category, acronyms: list[str] | tuple[str, ...]) -> str:
    """Canonical data-block code, e.g. ``N3-soil-Mo-Te-WaCo``."""
    if not 1 <= node_id <= MAX_NODE_ID:
        raise ValueError(f"node_id {node_id} outside 1..{MAX_NODE_ID}")
    if category not in BLOCK_CATEGORIES:
        raise ValueError(f"block category must be one of {BLOCK_CATEGORIES}, got {category!r}")
    if not acronyms:
        raise ValueError("acronym list must be non-empty")
    if len(set(acronyms)) != len(acronyms):
        raise ValueError(f"duplicate acronyms in {list(acronyms)}")
    for acr in acronyms:
        kind_for(acr, category)  # raises on unknown acronym
    return f"N{node_id}-{category}-" + "-".join(acronyms)


def parse_block_code(code: str) -> tuple[int, Category, tuple[str, ...]]:
    """Inverse of :func:`block_code`; validates every component."""
    m = _CODE_RE.match(code)
    if not m:
        raise ValueError(f"malformed block code {code!r}")
    node_id = int(m.group(1))
    category = m.group(2)
    acronyms = tuple(m.group(3).lstrip("-").split("-"))
    # Re-run the forward validation so parse accepts exactly the codes
    # block_code can produce.
    rebuilt = block_code(node_id, category, acronyms)
    assert rebuilt == code
    return node_id, category, acronyms


class DataBlock:
    """3-4 complete, grid-aligned channels from a single node."""

    __slots__ = ("code", "channels")

    def __init__(self, code: str, channels: list[tuple[Channel, TimeSeries]]) -> None:
        if not 3 <= len(channels) <= 4:
            raise ValueError(f"a data block needs 3-4 channels, got {len(channels)}")
        node_id, category, acronyms = parse_block_code(code)
        node_ids = {ch.node_id for ch, _ in channels}
        if node_ids != {node_id}:
            raise ValueError(f"channels span nodes {sorted(node_ids)}, block code names node {node_id}")
        ref = channels[0][1]
        for ch, ts in channels:
            if not ts.is_complete:
                raise ValueError(f"channel {ch.label} has missing samples")
            if ts.start != ref.start or ts.step_seconds != ref.step_seconds or len(ts) != len(ref):
                raise ValueError(f"channel {ch.label} is not grid-aligned with the block")
        got = tuple(ch.parameter.acronym for ch, _ in channels)
        if got != acronyms:
            raise ValueError(f"channel acronyms {got} do not match block code {code!r}")
        object.__setattr__(self, "code", code)
        object.__setattr__(self, "channels", tuple(channels))

    def __setattr__(self, name, value):
        raise AttributeError("DataBlock is immutable")

    def __len__(self) -> int:
        return len(self.channels)

    @property
    def node_id(self) -> int:
        return self.channels[0][0].node_id

    @property
    def grid(self) -> tuple[Timestamp, int, int]:
        ts = self.channels[0][1]
        return ts.start, ts.step_seconds, len(ts)

    def series_for(self, label: str) -> TimeSeries:
        for ch, ts in self.channels:
            if ch.label == label:
                return ts
        raise KeyError(f"no channel {label!r} in block {self.code}")

    def channel_labels(self) -> list[str]:
        return [ch.label for ch, _ in self.channels]

    def __repr__(self) -> str:
        return f"DataBlock({self.code}, n={self.grid[2]})"
