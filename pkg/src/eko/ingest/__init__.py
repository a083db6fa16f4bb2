"""Telemetry acquisition: CSV export parsing, gateway stream transport,
synthetic scenarios, alert evaluation, and block grouping."""

from .alerts import AlertEvent, AlertRule, evaluate_alerts
from .blocks import BlockSamples, group_blocks
from .records import (
    CSV_HEADER,
    RawRecord,
    RejectedLine,
    format_record,
    parse_export,
    parse_line,
    serialize_records,
)
from .stream import END_MARKER, StreamResult, StreamServer, consume_stream, serve_stream
from .synth import ChannelRecipe, Coupling, ScenarioSpec, generate_synthetic

__all__ = [
    "AlertEvent",
    "AlertRule",
    "BlockSamples",
    "CSV_HEADER",
    "ChannelRecipe",
    "Coupling",
    "END_MARKER",
    "RawRecord",
    "RejectedLine",
    "ScenarioSpec",
    "StreamResult",
    "StreamServer",
    "consume_stream",
    "evaluate_alerts",
    "format_record",
    "generate_synthetic",
    "group_blocks",
    "parse_export",
    "parse_line",
    "serialize_records",
    "serve_stream",
]
