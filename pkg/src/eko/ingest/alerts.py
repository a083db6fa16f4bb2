"""Threshold alert rules over raw record streams."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..core import ParameterKind, Timestamp
from .records import RawRecord

__all__ = ["AlertRule", "AlertEvent", "evaluate_alerts"]


@dataclass(frozen=True)
class AlertRule:
    """Fires when a matching record's value falls strictly outside
    [low, high]; either bound may be absent (but not both)."""

    rule_id: str
    node_id: int
    parameter: ParameterKind
    low: float | None = None
    high: float | None = None

    def __post_init__(self) -> None:
        if self.low is None and self.high is None:
            raise ValueError(f"rule {self.rule_id}: need at least one bound")
        if self.low is not None and self.high is not None and not self.low < self.high:
            raise ValueError(f"rule {self.rule_id}: low must be < high")

    def matches(self, record: RawRecord) -> bool:
        return record.node_id == self.node_id and record.parameter == self.parameter

    def violated_bound(self, value: float) -> str | None:
        if self.low is not None and value < self.low:
            return "low"
        if self.high is not None and value > self.high:
            return "high"
        return None


@dataclass(frozen=True)
class AlertEvent:
    rule_id: str
    timestamp: Timestamp
    observed: float
    bound: str  # "low" | "high"


def evaluate_alerts(rules: list[AlertRule], records: Iterable[RawRecord]) -> list[AlertEvent]:
    """One event per (record, rule) strict violation, ordered by timestamp
    (ties broken by rule id to keep the output deterministic).  Values equal
    to a bound are inside the allowed range and never fire."""
    events: list[AlertEvent] = []
    for record in records:
        for rule in rules:
            if not rule.matches(record):
                continue
            bound = rule.violated_bound(record.value)
            if bound is not None:
                events.append(AlertEvent(rule.rule_id, record.timestamp, record.value, bound))
    events.sort(key=lambda e: (e.timestamp.epoch_seconds, e.rule_id))
    return events
