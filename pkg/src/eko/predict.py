"""The four predictors: PARMA, PARMAX, KARMA, FORWAVER.

All share one contract: fit on a measuring horizon, expose innovations and
the detected deterministic part, forecast h steps ahead with a confidence
tube whose radius can only grow with the horizon.

PARMA    trend + ARMA on the residual (single channel).
PARMAX   trend + ARMAX using other block channels as exogenous inputs; the
         best input subset is chosen by validation score.
KARMA    trend + ARMA realized in state space, with a state-dimension search,
         predicted through the Kalman recursions.
FORWAVER wavelet approximation as the deterministic part, ARMA on the
         remainder.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations

import numpy as np
from scipy.stats import norm

from .core import DataBlock, TimeSeries, Timestamp
from .ident.arma import (
    ArmaModel,
    ArmaxModel,
    arma_forecast,
    arma_innovations,
    armax_forecast,
    armax_innovations,
    fit_arma,
    fit_armax,
    psi_weights,
)
from .ident.order import VALIDATION_FRACTION, OrderGrid, select_order
from .ident.statespace import StateSpaceModel, kalman_predict, realize_arma
from .ident.wavelet import dwt, idwt
from .quality import prediction_quality
from .trend import TrendModel, fit_trend

__all__ = [
    "PredictorKind",
    "PredictConfig",
    "FittedPredictor",
    "Forecast",
    "fit_parma",
    "fit_parmax",
    "fit_karma",
    "fit_forwaver",
    "fit_predictor",
    "forecast",
    "confidence_tube",
]

MIN_FIT_SAMPLES = 60


class PredictorKind(str, Enum):
    PARMA = "parma"
    PARMAX = "parmax"
    KARMA = "karma"
    FORWAVER = "forwaver"

    @property
    def uses_exogenous(self) -> bool:
        return self is PredictorKind.PARMAX


@dataclass(frozen=True)
class PredictConfig:
    arma_na_max: int = 4
    arma_nc_max: int = 4
    order_criterion: str = "bic"
    armax_na: tuple[int, int] = (1, 2)
    armax_nc: tuple[int, int] = (0, 1)
    armax_nb: tuple[int, int] = (1, 2)
    armax_nk: tuple[int, int] = (0, 2)
    karma_state_max: int = 6
    wavelet_taps: int = 8
    wavelet_levels: int = 4
    confidence_level: float = 0.95
    horizon_max: int = 56
    trend_max_degree: int = 3
    allow_diurnal: bool = True
    exo_policy: str = "cascade"  # "cascade" | "hold"

    def __post_init__(self) -> None:
        if not 0.5 < self.confidence_level < 1.0:
            raise ValueError("confidence level must lie in (0.5, 1)")
        if self.exo_policy not in ("cascade", "hold"):
            raise ValueError(f"unknown exogenous-future policy {self.exo_policy!r}")
        if self.horizon_max < 1:
            raise ValueError("horizon_max must be >= 1")


@dataclass(frozen=True)
class Forecast:
    """Predicted values plus per-step confidence-tube radii."""

    start: Timestamp
    step_seconds: int
    values: np.ndarray
    radii: np.ndarray
    level: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        radii = np.asarray(self.radii, dtype=float)
        if values.shape != radii.shape or values.ndim != 1:
            raise ValueError("values and radii must be 1-D with equal length")
        if np.any(radii < 0):
            raise ValueError("tube radii must be non-negative")
        if np.any(np.diff(radii) < 0):
            raise ValueError("tube radii must be non-decreasing in the horizon")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "radii", radii)

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass
class FittedPredictor:
    """One fitted (channel, predictor) pair ready to forecast."""

    kind: PredictorKind
    channel_label: str
    series: TimeSeries
    trend_model: TrendModel
    det_values: np.ndarray      # deterministic part over the measuring horizon
    stoch_values: np.ndarray    # series - det, what the stochastic model saw
    model: ArmaModel | ArmaxModel | StateSpaceModel
    innovations: TimeSeries
    config: PredictConfig
    fit_seconds: float
    metadata: dict = field(default_factory=dict)
    exo_series: dict[str, np.ndarray] = field(default_factory=dict)
    exo_forecasters: dict[str, "FittedPredictor"] = field(default_factory=dict)

    @property
    def sigma2(self) -> float:
        return float(self.model.sigma2)

    def forecast(self, horizon: int, exo_policy: str | None = None) -> Forecast:
        return forecast(self, horizon, exo_policy)


def _zscore(level: float) -> float:
    return float(norm.ppf(0.5 * (1.0 + level)))


def _arma_tube(model: ArmaModel, horizon: int, level: float) -> np.ndarray:
    psi = psi_weights(model, horizon)
    return _zscore(level) * np.sqrt(max(model.sigma2, 0.0) * np.cumsum(psi**2))


class _ArmaCandidate:
    """select_order adapter: ARMA fit plus forecast-with-tube."""

    def __init__(self, model: ArmaModel, train: np.ndarray, level: float):
        self.model = model
        self.train = train
        self.level = level
        self.sigma2 = model.sigma2
        self.n_params = model.n_params

    def forecast(self, horizon: int) -> tuple[np.ndarray, np.ndarray]:
        return arma_forecast(self.model, self.train, horizon), _arma_tube(self.model, horizon, self.level)


def _select_arma(stoch: np.ndarray, config: PredictConfig) -> tuple[ArmaModel, dict]:
    grid = OrderGrid(
        {"na": (0, config.arma_na_max), "nc": (0, config.arma_nc_max)},
        criterion=config.order_criterion,
    )

    def fit_fn(train: np.ndarray, orders: dict[str, int]) -> _ArmaCandidate:
        return _ArmaCandidate(fit_arma(train, orders["na"], orders["nc"]), train, config.confidence_level)

    sel = select_order(stoch, grid, fit_fn)
    return sel.candidate.model, dict(sel.orders)


def _detrend(series: TimeSeries, config: PredictConfig) -> tuple[TrendModel, np.ndarray, np.ndarray]:
    trend = fit_trend(series, config.trend_max_degree, config.allow_diurnal)
    det = trend.evaluate(np.arange(len(series)))
    return trend, det, series.values - det


def _require_fittable(series: TimeSeries) -> None:
    series.require_complete("predictor input")
    if len(series) < MIN_FIT_SAMPLES:
        raise ValueError(f"need at least {MIN_FIT_SAMPLES} samples, got {len(series)}")


def fit_parma(series: TimeSeries, config: PredictConfig | None = None, label: str = "") -> FittedPredictor:
    """Trend + ARMA single-channel predictor."""
    config = config or PredictConfig()
    _require_fittable(series)
    started = time.perf_counter()
    trend, det, stoch = _detrend(series, config)
    model, orders = _select_arma(stoch, config)
    innovations = series.with_values(arma_innovations(model, stoch))
    return FittedPredictor(
        kind=PredictorKind.PARMA,
        channel_label=label,
        series=series,
        trend_model=trend,
        det_values=det,
        stoch_values=stoch,
        model=model,
        innovations=innovations,
        config=config,
        fit_seconds=time.perf_counter() - started,
        metadata={"orders": orders, "trend": trend.basis_name},
    )


def fit_karma(series: TimeSeries, config: PredictConfig | None = None, label: str = "") -> FittedPredictor:
    """Kalman predictor on a state-space realization of the PARMA model.

    Beyond the natural dimension max(na, nc), candidate state dimensions
    1..karma_state_max are realized from the impulse response and scored by
    validation PQ; the sensitivity of forecasts to this choice is the point
    of the search.
    """
    config = config or PredictConfig()
    _require_fittable(series)
    started = time.perf_counter()
    trend, det, stoch = _detrend(series, config)
    model, orders = _select_arma(stoch, config)
    natural = max(model.na, model.nc)

    chosen_dim = natural
    dim_table: dict[int, float] = {}
    if natural > 0:
        n = stoch.shape[0]
        n_val = max(1, int(round(VALIDATION_FRACTION * n)))
        train, tail = stoch[: n - n_val], stoch[n - n_val :]
        sigma_y = float(np.std(train))
        try:
            base = fit_arma(train, model.na, model.nc)
        except ValueError:
            base = model
        best_key: tuple | None = None
        for dim in range(1, config.karma_state_max + 1):
            try:
                ss_c = realize_arma(base, dim)
                kp = kalman_predict(ss_c, train, n_val)
                radii = _zscore(config.confidence_level) * np.sqrt(kp.variances)
                if sigma_y > 0:
                    pq = prediction_quality(tail, kp.forecasts, radii, sigma_y).value
                else:
                    pq = -float(np.sqrt(np.mean((tail - kp.forecasts) ** 2)))
            except (ValueError, np.linalg.LinAlgError):
                continue
            dim_table[dim] = pq
            key = (-pq, abs(dim - natural), dim)
            if best_key is None or key < best_key:
                best_key = key
                chosen_dim = dim

    ss = realize_arma(model, chosen_dim if natural > 0 else None)
    innovations = series.with_values(kalman_predict(ss, stoch, 0).innovations)
    return FittedPredictor(
        kind=PredictorKind.KARMA,
        channel_label=label,
        series=series,
        trend_model=trend,
        det_values=det,
        stoch_values=stoch,
        model=ss,
        innovations=innovations,
        config=config,
        fit_seconds=time.perf_counter() - started,
        metadata={
            "orders": orders,
            "trend": trend.basis_name,
            "state_dim": ss.order,
            "natural_dim": natural,
            "dim_scores": dim_table,
        },
    )


def fit_forwaver(series: TimeSeries, config: PredictConfig | None = None, label: str = "") -> FittedPredictor:
    """Wavelet predictor: Daubechies approximation as the deterministic part,
    ARMA on the remainder; the trend model extrapolates the smooth part."""
    config = config or PredictConfig()
    _require_fittable(series)
    started = time.perf_counter()
    n = len(series)
    levels_cap = int(math.floor(math.log2(n))) - 1
    levels = min(config.wavelet_levels, levels_cap)
    reduced = levels < config.wavelet_levels
    dec = dwt(series.values, config.wavelet_taps, levels)
    det = idwt(dec.approximation_only())
    stoch = series.values - det
    trend = fit_trend(series.with_values(det), config.trend_max_degree, config.allow_diurnal)
    model, orders = _select_arma(stoch, config)
    innovations = series.with_values(arma_innovations(model, stoch))
    return FittedPredictor(
        kind=PredictorKind.FORWAVER,
        channel_label=label,
        series=series,
        trend_model=trend,
        det_values=det,
        stoch_values=stoch,
        model=model,
        innovations=innovations,
        config=config,
        fit_seconds=time.perf_counter() - started,
        metadata={
            "orders": orders,
            "trend": trend.basis_name,
            "wavelet_taps": config.wavelet_taps,
            "wavelet_levels": levels,
            "levels_reduced": reduced,
        },
    )


class _ArmaxCandidate:
    """select_order adapter for one exogenous subset."""

    def __init__(self, model: ArmaxModel, train: np.ndarray, exo_full: list[tuple[str, np.ndarray]], level: float):
        self.model = model
        self.train = train
        self.exo_full = exo_full
        self.level = level
        self.sigma2 = model.sigma2
        self.n_params = model.n_params

    def forecast(self, horizon: int) -> tuple[np.ndarray, np.ndarray]:
        m = self.train.shape[0]
        past = [u[:m] for _, u in self.exo_full]
        future = [u[m : m + horizon] for _, u in self.exo_full]
        if any(f.shape[0] < horizon for f in future):
            raise ValueError("not enough exogenous data to cover the validation window")
        values = armax_forecast(self.model, self.train, past, future, horizon)
        return values, _arma_tube(self.model, horizon, self.level)


def fit_parmax(
    block: DataBlock,
    target_label: str,
    config: PredictConfig | None = None,
) -> FittedPredictor:
    """ARMAX predictor over a data block.

    Every non-empty subset of the block's other channels is fitted (orders
    by the configured criterion) and scored by validation PQ on the held-out
    tail of the measuring horizon; the best subset wins.  This is why PARMAX
    runs many fits per channel and is by far the slowest predictor.
    """
    config = config or PredictConfig()
    target = block.series_for(target_label)
    _require_fittable(target)
    started = time.perf_counter()
    trend, det, stoch = _detrend(target, config)
    others = [lbl for lbl in block.channel_labels() if lbl != target_label]
    if not others:
        raise ValueError("PARMAX needs at least one other channel in the block")

    n = stoch.shape[0]
    n_val = max(1, int(round(VALIDATION_FRACTION * n)))
    train, tail = stoch[: n - n_val], stoch[n - n_val :]
    sigma_y = float(np.std(train))

    grid = OrderGrid(
        {"na": config.armax_na, "nc": config.armax_nc, "nb": config.armax_nb, "nk": config.armax_nk},
        criterion="bic",
    )

    subset_table: list[dict] = []
    best: tuple | None = None
    best_fit: tuple[tuple[str, ...], dict, ArmaxModel] | None = None
    for size in range(1, len(others) + 1):
        for subset in combinations(others, size):
            exo_full = [(lbl, block.series_for(lbl).values) for lbl in subset]

            def fit_fn(train_y: np.ndarray, orders: dict[str, int]) -> _ArmaxCandidate:
                m = train_y.shape[0]
                exo_train = [(lbl, u[:m]) for lbl, u in exo_full]
                model = fit_armax(
                    train_y,
                    exo_train,
                    orders["na"],
                    [orders["nb"]] * len(subset),
                    orders["nc"],
                    [orders["nk"]] * len(subset),
                )
                return _ArmaxCandidate(model, train_y, exo_full, config.confidence_level)

            try:
                sel = select_order(train, grid, fit_fn)
                cand: _ArmaxCandidate = sel.candidate  # fitted on `train`
                predicted, radii = cand.forecast(n_val)
                if sigma_y > 0:
                    pq = prediction_quality(tail, predicted, radii, sigma_y).value
                else:
                    pq = -float(np.sqrt(np.mean((tail - predicted) ** 2)))
            except (ValueError, np.linalg.LinAlgError) as exc:
                subset_table.append({"subset": subset, "error": str(exc)})
                continue
            subset_table.append({"subset": subset, "pq": pq, "orders": dict(sel.orders)})
            key = (-pq, len(subset), subset)
            if best is None or key < best:
                best = key
                best_fit = (subset, dict(sel.orders), None)

    if best_fit is None:
        failures = "; ".join(f"{t['subset']}: {t['error']}" for t in subset_table)
        raise ValueError(f"every exogenous subset failed: {failures}")

    subset, orders, _ = best_fit
    exo_full = [(lbl, block.series_for(lbl).values) for lbl in subset]
    model = fit_armax(
        stoch,
        exo_full,
        orders["na"],
        [orders["nb"]] * len(subset),
        orders["nc"],
        [orders["nk"]] * len(subset),
    )
    innovations = target.with_values(armax_innovations(model, stoch, [u for _, u in exo_full]))

    exo_forecasters: dict[str, FittedPredictor] = {}
    if config.exo_policy == "cascade":
        for lbl in subset:
            exo_forecasters[lbl] = fit_parma(block.series_for(lbl), config, label=lbl)

    return FittedPredictor(
        kind=PredictorKind.PARMAX,
        channel_label=target_label,
        series=target,
        trend_model=trend,
        det_values=det,
        stoch_values=stoch,
        model=model,
        innovations=innovations,
        config=config,
        fit_seconds=time.perf_counter() - started,
        metadata={"orders": orders, "trend": trend.basis_name, "subset": list(subset), "subset_table": subset_table},
        exo_series={lbl: u for lbl, u in exo_full},
        exo_forecasters=exo_forecasters,
    )


def fit_predictor(
    kind: PredictorKind,
    block: DataBlock,
    target_label: str,
    config: PredictConfig | None = None,
) -> FittedPredictor:
    """Uniform entry point used by the comparison harness."""
    if kind is PredictorKind.PARMAX:
        return fit_parmax(block, target_label, config)
    series = block.series_for(target_label)
    if kind is PredictorKind.PARMA:
        return fit_parma(series, config, label=target_label)
    if kind is PredictorKind.KARMA:
        return fit_karma(series, config, label=target_label)
    if kind is PredictorKind.FORWAVER:
        return fit_forwaver(series, config, label=target_label)
    raise ValueError(f"unknown predictor kind {kind}")


def confidence_tube(fp: FittedPredictor, horizon: int, level: float | None = None) -> np.ndarray:
    """Per-step tube radii R_1..R_h.

    ARMA-backed predictors use z * sigma * sqrt(cumsum(psi^2)) with psi the
    impulse response of the stochastic transfer function; KARMA takes the
    radii from the Kalman k-step prediction variances.  Either way the
    sequence is non-decreasing.  PARMAX tubes deliberately ignore the
    uncertainty of its forecast exogenous futures so tubes stay comparable
    across predictors.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    level = fp.config.confidence_level if level is None else level
    if isinstance(fp.model, StateSpaceModel):
        kp = kalman_predict(fp.model, fp.stoch_values, horizon)
        return _zscore(level) * np.sqrt(kp.variances)
    return _arma_tube(fp.model, horizon, level)


def forecast(fp: FittedPredictor, horizon: int, exo_policy: str | None = None) -> Forecast:
    """Forecast h steps past the measuring horizon: extrapolated trend plus
    the stochastic model's recursion (future innovations zero)."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if horizon > fp.config.horizon_max:
        raise ValueError(f"horizon {horizon} exceeds configured maximum {fp.config.horizon_max}")
    n = len(fp.series)
    trend_future = fp.trend_model.evaluate(np.arange(n, n + horizon))

    if isinstance(fp.model, StateSpaceModel):
        stoch_fc = kalman_predict(fp.model, fp.stoch_values, horizon).forecasts
    elif isinstance(fp.model, ArmaxModel):
        policy = exo_policy or fp.config.exo_policy
        past = [fp.exo_series[term.name] for term in fp.model.inputs]
        futures = []
        for term in fp.model.inputs:
            if policy == "hold":
                futures.append(np.full(horizon, fp.exo_series[term.name][-1]))
            elif policy == "cascade":
                caster = fp.exo_forecasters.get(term.name)
                if caster is None:
                    raise ValueError(f"no cascade forecaster for input {term.name!r}")
                futures.append(forecast(caster, horizon).values)
            else:
                raise ValueError(f"unknown exogenous-future policy {policy!r}")
        stoch_fc = armax_forecast(fp.model, fp.stoch_values, past, futures, horizon)
    else:
        stoch_fc = arma_forecast(fp.model, fp.stoch_values, horizon)

    radii = confidence_tube(fp, horizon)
    return Forecast(
        start=fp.series.time_at(n),
        step_seconds=fp.series.step_seconds,
        values=trend_future + stoch_fc,
        radii=radii,
        level=fp.config.confidence_level,
    )
