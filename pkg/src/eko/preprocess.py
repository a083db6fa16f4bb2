"""Raw samples to complete, synchronized, denoised series.

The standard channel pipeline is: hourly synchronization, despiking, gap
repair (linear for isolated gaps, two-sided autoregressive for extended
ones), then block averaging down to the forecast step.  The trend/residual
split used by the predictors also lives here (zero-phase low-pass filter).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .core import MISSING, Timestamp, TimeSeries
from .ident.correlation import autocovariance, levinson_durbin

__all__ = [
    "GapDescriptor",
    "FilterSpec",
    "Decomposition",
    "PreprocessConfig",
    "InsufficientAnchorError",
    "synchronize_hourly",
    "classify_gaps",
    "interpolate_linear",
    "interpolate_ar",
    "fill_gaps",
    "downsample_mean",
    "design_cheby2",
    "filtfilt",
    "split_trend",
    "despike",
    "run_channel_pipeline",
]

HOUR = 3600


class InsufficientAnchorError(ValueError):
    """AR interpolation lacks anchor data; treat the gap as unrecoverable."""


@dataclass(frozen=True)
class GapDescriptor:
    """One maximal run of missing samples."""

    start: int
    length: int
    kind: str  # "isolated" | "extended" | "unrecoverable"

    @property
    def stop(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class FilterSpec:
    """Low-pass Chebyshev type-II design parameters."""

    order: int = 4
    atten_db: float = 40.0
    edge: float = 0.3  # stopband edge as a fraction of Nyquist

    def __post_init__(self) -> None:
        if self.order < 2 or self.order % 2:
            raise ValueError("filter order must be an even integer >= 2")
        if self.atten_db <= 0:
            raise ValueError("stopband attenuation must be > 0 dB")
        if not 0.0 < self.edge < 1.0:
            raise ValueError("stopband edge must lie in (0, 1)")


@dataclass(frozen=True)
class Decomposition:
    """deterministic + stochastic == original, sample-exact."""

    deterministic: TimeSeries
    stochastic: TimeSeries


@dataclass(frozen=True)
class PreprocessConfig:
    g_iso: int = 2
    g_max: int = 24
    ar_max_order: int = 8
    filter: FilterSpec = field(default_factory=FilterSpec)
    downsample_factor: int = 3
    despike_window: int = 5
    despike_k: float = 3.0

    def __post_init__(self) -> None:
        if self.g_iso < 1 or self.g_max <= self.g_iso:
            raise ValueError("need g_iso >= 1 and g_max > g_iso")
        if self.ar_max_order < 1:
            raise ValueError("ar_max_order must be >= 1")
        if self.downsample_factor not in (1, 3, 4):
            raise ValueError("downsample factor must be 1, 3 or 4")
        if self.despike_window < 3 or self.despike_window % 2 == 0:
            raise ValueError("despike window must be an odd integer >= 3")
        if self.despike_k <= 0:
            raise ValueError("despike threshold multiplier must be > 0")


def synchronize_hourly(samples) -> TimeSeries:
    """Average raw (Timestamp, value) samples into hourly bins.

    The grid runs from the floor-hour of the earliest sample through the
    floor-hour of the latest; a bin with no samples becomes MISSING.
    """
    pairs = [(ts.epoch_seconds, float(v)) for ts, v in samples]
    if not pairs:
        raise ValueError("cannot synchronize an empty sample set")
    times = np.array([p[0] for p in pairs], dtype=np.int64)
    vals = np.array([p[1] for p in pairs], dtype=np.float64)
    first = int(times.min()) // HOUR * HOUR
    last = int(times.max()) // HOUR * HOUR
    n_bins = (last - first) // HOUR + 1
    bins = (times - first) // HOUR
    sums = np.bincount(bins, weights=vals, minlength=n_bins)
    counts = np.bincount(bins, minlength=n_bins)
    out = np.full(n_bins, MISSING)
    nonzero = counts > 0
    out[nonzero] = sums[nonzero] / counts[nonzero]
    return TimeSeries(Timestamp(first), HOUR, out)


def classify_gaps(series: TimeSeries, g_iso: int = 2, g_max: int = 24) -> list[GapDescriptor]:
    """Describe every maximal missing run exactly once.

    Interior runs are isolated (length <= g_iso), extended (<= g_max) or
    unrecoverable; leading and trailing runs are always unrecoverable since
    they lack an anchor on one side.
    """
    if g_iso < 1 or g_max <= g_iso:
        raise ValueError("need g_iso >= 1 and g_max > g_iso")
    mask = series.missing_mask
    n = mask.shape[0]
    gaps: list[GapDescriptor] = []
    i = 0
    while i < n:
        if not mask[i]:
            i += 1
            continue
        j = i
        while j < n and mask[j]:
            j += 1
        length = j - i
        if i == 0 or j == n:
            kind = "unrecoverable"
        elif length <= g_iso:
            kind = "isolated"
        elif length <= g_max:
            kind = "extended"
        else:
            kind = "unrecoverable"
        gaps.append(GapDescriptor(i, length, kind))
        i = j
    return gaps


def interpolate_linear(series: TimeSeries, gap: GapDescriptor) -> TimeSeries:
    """Fill an isolated gap with the straight line between its neighbors."""
    if gap.kind != "isolated":
        raise ValueError(f"linear interpolation applies to isolated gaps, not {gap.kind}")
    values = series.values
    left, right = gap.start - 1, gap.stop
    if left < 0 or right >= len(series) or np.isnan(values[left]) or np.isnan(values[right]):
        raise ValueError("gap neighbors must be present")
    out = values.copy()
    span = right - left
    ks = np.arange(1, gap.length + 1)
    out[gap.start : gap.stop] = values[left] + (values[right] - values[left]) * ks / span
    return series.with_values(out)


def _anchor_run(mask: np.ndarray, index: int, direction: int) -> int:
    """Length of the contiguous non-missing run adjacent to ``index``."""
    n = mask.shape[0]
    count = 0
    i = index
    while 0 <= i < n and not mask[i]:
        count += 1
        i += direction
    return count


def _lattice_ar(segment: np.ndarray, max_order: int) -> tuple[list[np.ndarray], np.ndarray]:
    """Levinson lattice with data-driven (Burg) reflection coefficients.

    Returns the coefficient vector for every order 0..p and the prediction
    error ladder.  Unlike the autocovariance route, the reflection estimates
    here do not taper towards zero at high lags, so near-deterministic
    signals (e.g. a clean sinusoid) extrapolate without artificial damping;
    |reflection| < 1 still holds by construction.
    """
    x = np.asarray(segment, dtype=float)
    n = x.shape[0]
    f = x.copy()
    b = x.copy()
    err_filter = np.array([1.0])
    ladder = [err_filter]
    sigma2 = float(np.dot(x, x) / n)
    sigma2_ladder = [sigma2]
    for _ in range(1, max_order + 1):
        fp = f[1:]
        bp = b[:-1]
        den = float(np.dot(fp, fp) + np.dot(bp, bp))
        if den <= 1e-300 or fp.shape[0] < 1:
            break
        k = -2.0 * float(np.dot(fp, bp)) / den
        k = float(np.clip(k, -1.0 + 1e-12, 1.0 - 1e-12))
        err_filter = np.concatenate([err_filter, [0.0]]) + k * np.concatenate([err_filter, [0.0]])[::-1]
        ladder.append(err_filter)
        sigma2 *= 1.0 - k * k
        sigma2_ladder.append(sigma2)
        f, b = fp + k * bp, bp + k * fp
    coeffs = [-ef[1:] for ef in ladder]  # error filter [1, -a_1, ..., -a_p]
    return coeffs, np.asarray(sigma2_ladder)


def _ar_extrapolate(segment: np.ndarray, steps: int, max_order: int) -> np.ndarray:
    """Forecast ``steps`` values past the end of ``segment`` with an AR model
    fit by the Levinson lattice; the order minimizes the final prediction
    error."""
    mu = float(segment.mean())
    centered = segment - mu
    if float(np.var(centered)) <= (1e-12 * max(1.0, abs(mu))) ** 2:
        return np.full(steps, mu)
    p_cap = min(max_order, segment.shape[0] - 1)
    coeffs_by_order, sigma2_ladder = _lattice_ar(centered, p_cap)
    n = centered.shape[0]
    orders = np.arange(sigma2_ladder.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        fpe = np.where(n - orders - 1 > 0, sigma2_ladder * (n + orders + 1) / (n - orders - 1), np.inf)
    order = int(np.argmin(fpe))
    coeffs = coeffs_by_order[order]
    buf = np.concatenate([centered, np.zeros(steps)])
    for k in range(steps):
        t = n + k
        buf[t] = np.dot(coeffs, buf[t - order : t][::-1]) if order else 0.0
    return buf[n:] + mu


def interpolate_ar(series: TimeSeries, gap: GapDescriptor, max_order: int = 8) -> TimeSeries:
    """Fill an extended gap by cross-fading forward and backward AR forecasts.

    The forward model is fit on the contiguous run before the gap, the
    backward one on the time-reversed run after it; the blend ramps linearly
    from the forward prediction at the gap start to the backward one at the
    gap end.  Raises :class:`InsufficientAnchorError` when either side is too
    short even for an order-1 model (callers then downgrade the gap to
    unrecoverable).
    """
    if gap.kind != "extended":
        raise ValueError(f"AR interpolation applies to extended gaps, not {gap.kind}")
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    mask = series.missing_mask
    pre_run = _anchor_run(mask, gap.start - 1, -1)
    post_run = _anchor_run(mask, gap.stop, +1)
    order_cap = min(max_order, pre_run // 4, post_run // 4)
    if order_cap < 1:
        raise InsufficientAnchorError(
            f"gap at {gap.start}: anchors of {pre_run} and {post_run} samples "
            f"cannot support AR interpolation"
        )
    values = series.values
    pre = values[gap.start - pre_run : gap.start]
    post = values[gap.stop : gap.stop + post_run]
    forward = _ar_extrapolate(pre, gap.length, order_cap)
    backward = _ar_extrapolate(post[::-1], gap.length, order_cap)[::-1]
    w = np.linspace(1.0, 0.0, gap.length) if gap.length > 1 else np.array([0.5])
    out = values.copy()
    out[gap.start : gap.stop] = w * forward + (1.0 - w) * backward
    return series.with_values(out)


def fill_gaps(
    series: TimeSeries,
    g_iso: int = 2,
    g_max: int = 24,
    ar_max_order: int = 8,
) -> tuple[TimeSeries, list[GapDescriptor]]:
    """Repair every repairable gap; returns the new series plus the gaps that
    stayed unrecoverable (including extended gaps whose anchors were too
    short)."""
    gaps = classify_gaps(series, g_iso, g_max)
    unrecoverable: list[GapDescriptor] = []
    for gap in gaps:
        if gap.kind == "isolated":
            series = interpolate_linear(series, gap)
        elif gap.kind == "extended":
            try:
                series = interpolate_ar(series, gap, ar_max_order)
            except InsufficientAnchorError:
                unrecoverable.append(GapDescriptor(gap.start, gap.length, "unrecoverable"))
        else:
            unrecoverable.append(gap)
    return series, unrecoverable


def downsample_mean(series: TimeSeries, factor: int) -> TimeSeries:
    """Block-average by ``factor``; a trailing partial block is dropped."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    values = series.require_complete("downsample input")
    if factor == 1:
        return series
    n_out = len(series) // factor
    if n_out < 1:
        raise ValueError(f"series of length {len(series)} too short for factor {factor}")
    means = values[: n_out * factor].reshape(n_out, factor).mean(axis=1)
    return TimeSeries(series.start, series.step_seconds * factor, means)


def design_cheby2(spec: FilterSpec) -> tuple[np.ndarray, np.ndarray]:
    """Low-pass Chebyshev type-II coefficients (b, a), DC gain normalized to 1.

    The stopband is equiripple at ``-atten_db`` from the edge up to Nyquist;
    the passband is monotone.  An unstable design (pole on or outside the
    unit circle) is rejected.
    """
    b, a = scipy.signal.cheby2(spec.order, spec.atten_db, spec.edge, btype="low", output="ba")
    dc = np.sum(b) / np.sum(a)
    b = b / dc
    poles = np.roots(a)
    if poles.size and np.max(np.abs(poles)) >= 1.0:
        raise ValueError(f"unstable filter design (pole radius {np.max(np.abs(poles)):.6f})")
    return b, a


def filtfilt(coeffs: tuple[np.ndarray, np.ndarray], series: TimeSeries) -> TimeSeries:
    """Zero-phase forward-backward filtering with reflected edge padding.

    Attenuation applies twice (doubled in dB) and phase is cancelled; the
    padding length is three times the filter order.
    """
    b, a = coeffs
    order = max(len(a), len(b)) - 1
    values = series.require_complete("filtfilt input")
    padlen = 3 * order
    if len(series) <= padlen:
        raise ValueError(f"series of length {len(series)} too short for padding {padlen}")
    fwd = scipy.signal.filtfilt(b, a, values, padtype="even", padlen=padlen)
    # Run the same pass on the reversed signal and average: edge transients
    # are finite, so this is what makes time reversal an exact symmetry
    # rather than an approximate one.
    bwd = scipy.signal.filtfilt(b, a, values[::-1], padtype="even", padlen=padlen)[::-1]
    return series.with_values(0.5 * (fwd + bwd))


def split_trend(series: TimeSeries, spec: FilterSpec | None = None) -> Decomposition:
    """Split into low-pass deterministic part and the exact remainder."""
    spec = spec or FilterSpec()
    deterministic = filtfilt(design_cheby2(spec), series)
    stochastic = series.with_values(series.values - deterministic.values)
    return Decomposition(deterministic, stochastic)


def despike(series: TimeSeries, window: int = 5, k: float = 3.0) -> tuple[TimeSeries, list[int]]:
    """Hampel filter: replace samples deviating from their window median by
    more than ``k`` scaled median-absolute-deviations.

    Windows are centered and truncated at the edges.  Replacement decisions
    are taken against the original values, so the result does not depend on
    scan order.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd integer >= 3")
    if k <= 0:
        raise ValueError("k must be > 0")
    values = series.require_complete("despike input")
    n = values.shape[0]
    half = window // 2
    out = values.copy()
    replaced: list[int] = []
    medians = np.empty(n)
    mads = np.empty(n)
    if n >= window:
        windows = np.lib.stride_tricks.sliding_window_view(values, window)
        med_mid = np.median(windows, axis=1)
        mad_mid = np.median(np.abs(windows - med_mid[:, None]), axis=1)
        medians[half : n - half] = med_mid
        mads[half : n - half] = mad_mid
    edge = list(range(min(half, n))) + list(range(max(n - half, 0), n))
    for i in edge:
        win = values[max(0, i - half) : min(n, i + half + 1)]
        medians[i] = np.median(win)
        mads[i] = np.median(np.abs(win - medians[i]))
    deviation = np.abs(values - medians)
    hits = deviation > k * 1.4826 * mads
    for i in np.nonzero(hits)[0]:
        out[i] = medians[i]
        replaced.append(int(i))
    return series.with_values(out), replaced


def run_channel_pipeline(
    samples,
    config: PreprocessConfig | None = None,
) -> tuple[TimeSeries, dict]:
    """Standard per-channel pipeline: synchronize, despike, fill, downsample.

    Returns the processed series (which may still contain unrecoverable
    gaps; callers decide how to crop) and a small report dict.
    """
    config = config or PreprocessConfig()
    hourly = synchronize_hourly(samples)
    observed = hourly.values[~hourly.missing_mask]
    spiky = hourly
    replaced: list[int] = []
    if observed.shape[0] >= config.despike_window:
        # Despike only the observed samples so the Hampel windows are dense.
        compact = TimeSeries(hourly.start, hourly.step_seconds, observed)
        cleaned, replaced_compact = despike(compact, config.despike_window, config.despike_k)
        restored = hourly.values.copy()
        restored[~hourly.missing_mask] = cleaned.values
        spiky = hourly.with_values(restored)
        obs_idx = np.nonzero(~hourly.missing_mask)[0]
        replaced = [int(obs_idx[i]) for i in replaced_compact]
    filled, unrecoverable = fill_gaps(spiky, config.g_iso, config.g_max, config.ar_max_order)
    # Trim leading/trailing missing runs, then cut at interior unrecoverable
    # gaps is left to the block assembler; here we only trim the ends.
    mask = filled.missing_mask
    present = np.nonzero(~mask)[0]
    if present.shape[0] == 0:
        raise ValueError("channel has no usable samples")
    trimmed = filled.slice(int(present[0]), int(present[-1]) + 1)
    complete = trimmed
    if trimmed.is_complete and len(trimmed) >= config.downsample_factor:
        complete = downsample_mean(trimmed, config.downsample_factor)
    report = {
        "hourly_bins": len(hourly),
        "despiked": replaced,
        "unrecoverable_gaps": unrecoverable,
        "complete": complete.is_complete,
    }
    return complete, report
