"""Synthetic sensor-network scenarios.

Each channel is generated as baseline + diurnal sinusoid + linear drift plus
AR(1) noise; cross-channel couplings add a lagged, scaled copy of the source
channel's noiseless component to the target's.  Values are clamped to the
parameter's physical range, timestamps may jitter, and samples may drop out.
Generation is fully deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import Channel, Timestamp, validate_value
from .records import RawRecord

__all__ = ["ChannelRecipe", "Coupling", "ScenarioSpec", "generate_synthetic"]

HOUR = 3600
DAY = 86400
DIURNAL_PERIOD = 24.0  # hours


@dataclass(frozen=True)
class ChannelRecipe:
    """``ar1`` is the noise autocorrelation over one hour, so persistence is
    independent of the raw sampling interval."""

    channel: Channel
    baseline: float
    diurnal_amplitude: float = 0.0
    diurnal_phase_hours: float = 0.0
    drift_per_day: float = 0.0
    ar1: float = 0.0
    noise_std: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.ar1 < 1.0:
            raise ValueError("ar1 coefficient must lie in [0, 1)")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")

    @property
    def key(self) -> str:
        return f"N{self.channel.node_id}-{self.channel.label}"


@dataclass(frozen=True)
class Coupling:
    """target's noiseless part += gain * source's noiseless part lagged."""

    target: str  # ChannelRecipe.key
    source: str
    gain: float
    lag_seconds: int = 0

    def __post_init__(self) -> None:
        if self.lag_seconds < 0:
            raise ValueError("lag must be >= 0")


@dataclass(frozen=True)
class ScenarioSpec:
    start: Timestamp
    duration_hours: int
    channels: tuple[ChannelRecipe, ...]
    couplings: tuple[Coupling, ...] = ()
    sample_interval_seconds: int = 900  # richer than hourly, averaged later
    dropout: float = 0.0
    jitter_seconds: int = 0

    def __post_init__(self) -> None:
        if self.duration_hours < 1:
            raise ValueError("duration must be >= 1 hour")
        if not self.channels:
            raise ValueError("scenario needs at least one channel")
        if not 1 <= self.sample_interval_seconds <= HOUR:
            raise ValueError("sample interval must give at least one sample per hour")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout probability must lie in [0, 1)")
        if self.jitter_seconds < 0 or 2 * self.jitter_seconds >= self.sample_interval_seconds:
            raise ValueError("jitter must be >= 0 and below half the sample interval")
        keys = [c.key for c in self.channels]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate channel recipes")
        for c in self.couplings:
            if c.target not in keys or c.source not in keys:
                raise ValueError(f"coupling references unknown channel: {c.target} <- {c.source}")

    @property
    def n_samples(self) -> int:
        return self.duration_hours * HOUR // self.sample_interval_seconds


def _noiseless(recipe: ChannelRecipe, t_seconds: np.ndarray) -> np.ndarray:
    hours = t_seconds / HOUR
    out = np.full(t_seconds.shape, recipe.baseline, dtype=float)
    if recipe.diurnal_amplitude:
        out += recipe.diurnal_amplitude * np.sin(
            2.0 * math.pi * (hours + recipe.diurnal_phase_hours) / DIURNAL_PERIOD
        )
    if recipe.drift_per_day:
        out += recipe.drift_per_day * (t_seconds / DAY)
    return out


def generate_synthetic(spec: ScenarioSpec, seed: int) -> list[RawRecord]:
    """Realize a scenario into raw records sorted by (time, node, sensor).

    With dropout 0 the record count is exactly
    ``n_channels * duration_hours * samples_per_hour``.
    """
    rng = np.random.default_rng(seed)
    n = spec.n_samples
    rel = np.arange(n, dtype=np.int64) * spec.sample_interval_seconds

    det = {r.key: _noiseless(r, rel.astype(float)) for r in spec.channels}
    coupled = {k: v.copy() for k, v in det.items()}
    for c in spec.couplings:
        lagged = _noiseless(
            next(r for r in spec.channels if r.key == c.source),
            rel.astype(float) - float(c.lag_seconds),
        )
        coupled[c.target] = coupled[c.target] + c.gain * lagged

    records: list[RawRecord] = []
    for recipe in spec.channels:  # fixed order keeps the RNG stream stable
        values = coupled[recipe.key].copy()
        if recipe.noise_std > 0:
            w = rng.normal(0.0, recipe.noise_std * math.sqrt(1.0 - recipe.ar1**2), n)
            noise = np.empty(n)
            acc = 0.0
            for i in range(n):
                acc = recipe.ar1 * acc + w[i]
                noise[i] = acc
            values += noise
        kind = recipe.channel.parameter
        values = np.clip(values, kind.range_min, kind.range_max)
        if spec.jitter_seconds > 0:
            offsets = rng.integers(-spec.jitter_seconds, spec.jitter_seconds + 1, n)
        else:
            offsets = np.zeros(n, dtype=np.int64)
        if spec.dropout > 0.0:
            keep = rng.random(n) >= spec.dropout
        else:
            keep = np.ones(n, dtype=bool)
        for i in np.nonzero(keep)[0]:
            ts = spec.start + int(rel[i] + offsets[i])
            value = float(values[i])
            assert validate_value(kind, value)
            records.append(RawRecord(ts, recipe.channel.node_id, recipe.channel.sensor_id, kind, value))
    records.sort(
        key=lambda r: (r.timestamp.epoch_seconds, r.node_id, r.sensor_id, r.parameter.key)
    )
    return records
