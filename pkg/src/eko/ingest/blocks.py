"""Grouping raw records into correlation blocks.

A grouping entry (node, category, acronyms) selects records by node and
parameter; a record can land in several blocks, and records matching no
block are reported as orphans rather than dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import (
    NetworkTopology,
    ParameterKind,
    Timestamp,
    block_code,
    kind_for,
)
from .records import RawRecord

__all__ = ["BlockSamples", "group_blocks"]


@dataclass
class BlockSamples:
    """Raw (unsynchronized) per-channel sample sets for one block."""

    code: str
    node_id: int
    category: str
    kinds: tuple[ParameterKind, ...]
    samples: dict[str, list[tuple[Timestamp, float]]] = field(default_factory=dict)
    sensors: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for kind in self.kinds:
            self.samples.setdefault(kind.acronym, [])

    def add(self, record: RawRecord) -> None:
        self.samples[record.acronym].append((record.timestamp, record.value))
        self.sensors.setdefault(record.acronym, record.sensor_id)

    @property
    def sample_count(self) -> int:
        return sum(len(v) for v in self.samples.values())


def group_blocks(
    records: list[RawRecord],
    topology: NetworkTopology,
    grouping: list[tuple[int, str, list[str]]],
) -> tuple[dict[str, BlockSamples], list[RawRecord]]:
    """Distribute records into every matching block; return (blocks, orphans).

    Every grouping entry must reference parameters its node actually
    provides according to the topology.
    """
    blocks: dict[str, BlockSamples] = {}
    selectors: dict[tuple[int, str], list[str]] = {}
    for node_id, category, acronyms in grouping:
        code = block_code(node_id, category, acronyms)
        kinds = tuple(kind_for(acr, category) for acr in acronyms)
        for kind in kinds:
            if not topology.provides(node_id, kind):
                raise ValueError(
                    f"grouping {code}: node {node_id} provides no {kind.acronym} ({kind.category})"
                )
        if code in blocks:
            raise ValueError(f"duplicate grouping entry {code}")
        blocks[code] = BlockSamples(code, node_id, category, kinds)
        for kind in kinds:
            selectors.setdefault((node_id, kind.key), []).append(code)

    orphans: list[RawRecord] = []
    for record in records:
        targets = selectors.get((record.node_id, record.parameter.key))
        if not targets:
            orphans.append(record)
            continue
        for code in targets:
            blocks[code].add(record)
    return blocks, orphans
