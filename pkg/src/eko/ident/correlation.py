"""Autocovariance estimation and the Levinson-Durbin recursion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ArModel", "LevinsonResult", "autocovariance", "levinson_durbin"]


@dataclass(frozen=True)
class ArModel:
    """Autoregressive model ``y_t = sum_i a[i-1] * y_{t-i} + e_t`` on the
    mean-removed signal.  ``sigma2`` is the innovation variance."""

    coefficients: np.ndarray
    sigma2: float
    mean: float = 0.0

    @property
    def order(self) -> int:
        return int(len(self.coefficients))

    def is_stable(self, radius: float = 1.0) -> bool:
        if self.order == 0:
            return True
        poly = np.concatenate(([1.0], -np.asarray(self.coefficients)))
        roots = np.roots(poly)
        return bool(np.all(np.abs(roots) < radius)) if roots.size else True

    def predict_next(self, history: np.ndarray) -> float:
        """One-step prediction from the last ``order`` raw samples."""
        if self.order == 0:
            return self.mean
        h = np.asarray(history, dtype=float)[-self.order:] - self.mean
        if h.shape[0] < self.order:
            h = np.concatenate([np.zeros(self.order - h.shape[0]), h])
        return self.mean + float(np.dot(self.coefficients, h[::-1]))


@dataclass(frozen=True)
class LevinsonResult:
    """Full Levinson-Durbin output: the order-``p`` model plus the whole
    ladder of reflection coefficients and prediction-error variances."""

    model: ArModel
    reflection: np.ndarray          # k_1 .. k_p
    sigma2_by_order: np.ndarray     # sigma^2_0 .. sigma^2_p
    fpe_by_order: np.ndarray | None  # Akaike FPE, present when n_samples given


def autocovariance(values: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased autocovariances r_0..r_max_lag of a complete series.

    r_k = (1/N) * sum_{t=k}^{N-1} (y_t - mu)(y_{t-k} - mu).  The biased
    normalization keeps the sequence positive semi-definite, which in turn
    keeps every Levinson reflection coefficient inside (-1, 1).
    """
    y = np.asarray(values, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("values must be one-dimensional")
    if np.isnan(y).any():
        raise ValueError("autocovariance requires a complete series")
    n = y.shape[0]
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    if max_lag >= n:
        raise ValueError(f"max_lag {max_lag} must be < series length {n}")
    d = y - y.mean()
    # FFT-based estimate: O(N log N) instead of O(N * max_lag).
    nfft = 1 << int(np.ceil(np.log2(2 * n - 1)))
    spectrum = np.fft.rfft(d, nfft)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), nfft)[: max_lag + 1] / n
    return acov


def levinson_durbin(
    r: np.ndarray,
    order: int,
    n_samples: int | None = None,
) -> LevinsonResult:
    """Solve the Yule-Walker equations by the Levinson-Durbin recursion.

    Parameters
    ----------
    r : autocovariances r_0..r_m with m >= order.
    order : AR order to solve for.
    n_samples : when given, the per-order Akaike final prediction error
        ``sigma2 * (n + p + 1) / (n - p - 1)`` is filled in, which callers use
        to pick an order.

    Raises
    ------
    ValueError
        If the covariance sequence is invalid (r_0 <= 0 or a reflection
        coefficient reaches magnitude 1); the message names the failing order.
    """
    r = np.asarray(r, dtype=np.float64)
    if order < 0:
        raise ValueError("order must be >= 0")
    if r.shape[0] <= order:
        raise ValueError(f"need at least {order + 1} autocovariance lags, got {r.shape[0]}")
    if r[0] <= 0.0:
        raise ValueError("r_0 must be > 0 (zero-variance signal)")

    a = np.zeros(0)
    sigma2 = float(r[0])
    reflection = np.zeros(order)
    sigma2_by_order = np.zeros(order + 1)
    sigma2_by_order[0] = sigma2

    for p in range(1, order + 1):
        acc = r[p] - np.dot(a, r[p - 1 : 0 : -1]) if p > 1 else r[1]
        k = acc / sigma2
        if not np.isfinite(k) or abs(k) >= 1.0:
            raise ValueError(f"invalid covariance sequence: |reflection| >= 1 at order {p}")
        a_new = np.empty(p)
        a_new[: p - 1] = a - k * a[::-1]
        a_new[p - 1] = k
        a = a_new
        reflection[p - 1] = k
        sigma2 *= 1.0 - k * k
        sigma2_by_order[p] = sigma2

    fpe = None
    if n_samples is not None:
        orders = np.arange(order + 1)
        denom = n_samples - orders - 1
        with np.errstate(divide="ignore", invalid="ignore"):
            fpe = np.where(denom > 0, sigma2_by_order * (n_samples + orders + 1) / denom, np.inf)

    model = ArModel(coefficients=a, sigma2=max(sigma2, 0.0))
    return LevinsonResult(model, reflection, sigma2_by_order, fpe)
