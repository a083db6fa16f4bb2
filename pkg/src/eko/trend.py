"""Low-order deterministic trend: polynomial basis plus an optional diurnal
sinusoid pair, selected by BIC.

The basis is evaluated on a centered, scaled sample index so that it can be
extrapolated to any future grid instant without conditioning trouble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TimeSeries

__all__ = ["TrendModel", "fit_trend"]

DAY_SECONDS = 86400.0


@dataclass(frozen=True)
class TrendModel:
    """degree 0..3 polynomial, optionally + (sin, cos) at 24 h period."""

    degree: int
    diurnal: bool
    coefficients: np.ndarray
    n_fit: int
    step_seconds: int
    bic: float

    @property
    def basis_name(self) -> str:
        return f"poly{self.degree}" + ("+diurnal" if self.diurnal else "")

    @property
    def n_params(self) -> int:
        return self.degree + 1 + (2 if self.diurnal else 0)

    def design(self, indices: np.ndarray) -> np.ndarray:
        k = np.asarray(indices, dtype=float)
        x = (k - (self.n_fit - 1) / 2.0) / max(self.n_fit - 1, 1)
        cols = [x**d for d in range(self.degree + 1)]
        if self.diurnal:
            period = DAY_SECONDS / self.step_seconds
            cols.append(np.sin(2.0 * math.pi * k / period))
            cols.append(np.cos(2.0 * math.pi * k / period))
        return np.stack(cols, axis=1)

    def evaluate(self, indices: np.ndarray) -> np.ndarray:
        """Trend values at the given sample indices (past or future)."""
        return self.design(indices) @ self.coefficients


def _fit_basis(values: np.ndarray, step_seconds: int, degree: int, diurnal: bool) -> TrendModel:
    n = values.shape[0]
    probe = TrendModel(degree, diurnal, np.zeros(degree + 1 + (2 if diurnal else 0)), n, step_seconds, 0.0)
    X = probe.design(np.arange(n))
    coeffs, _, _, _ = np.linalg.lstsq(X, values, rcond=None)
    rss = float(np.sum((values - X @ coeffs) ** 2))
    bic = n * math.log(max(rss / n, 1e-300)) + probe.n_params * math.log(n)
    return TrendModel(degree, diurnal, coeffs, n, step_seconds, bic)


def fit_trend(series: TimeSeries, max_degree: int = 3, allow_diurnal: bool = True) -> TrendModel:
    """Best trend over the basis grid by BIC; ties favor fewer parameters.

    The diurnal pair is only offered when the grid resolves a 24 h cycle
    (more than two samples per period).
    """
    values = series.require_complete("trend input")
    n = values.shape[0]
    if n < 8:
        raise ValueError(f"series of length {n} too short for trend fitting")
    period = DAY_SECONDS / series.step_seconds
    candidates = []
    for degree in range(0, max_degree + 1):
        for diurnal in (False, True):
            if diurnal and (not allow_diurnal or period < 3.0):
                continue
            if n <= degree + 1 + (2 if diurnal else 0) + 2:
                continue
            candidates.append(_fit_basis(values, series.step_seconds, degree, diurnal))
    best = min(candidates, key=lambda t: (t.bic, t.n_params, t.degree, t.diurnal))
    return best
