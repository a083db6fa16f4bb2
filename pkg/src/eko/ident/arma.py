"""ARMA and ARMAX models with deterministic two-stage estimation.

Fitting runs a long autoregression first (Levinson-Durbin) to estimate the
innovation sequence, then a single least-squares pass on lagged outputs,
lagged inputs and lagged innovation estimates.  No iterative optimizer is
involved, so results are exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .correlation import autocovariance, levinson_durbin

__all__ = [
    "ArmaModel",
    "ExogenousTerm",
    "ArmaxModel",
    "CollinearInputError",
    "fit_arma",
    "fit_armax",
    "arma_innovations",
    "armax_innovations",
    "arma_forecast",
    "armax_forecast",
    "psi_weights",
    "stabilize_poly",
]

#: Stabilized roots are clamped to this radius when reflection alone would
#: leave them on the unit circle.
CLAMP_RADIUS = 0.99

_DEGENERATE_REL_STD = 1e-12


class CollinearInputError(ValueError):
    """Raised when regression columns of one input are linearly dependent."""

    def __init__(self, offenders: list[str]):
        self.offenders = offenders
        super().__init__(f"collinear regressors from: {', '.join(offenders)}")


def _char_root_radius(coeffs: np.ndarray, sign: float) -> float:
    """Largest root modulus of z^p + sign*c_1 z^(p-1) + ... + sign*c_p."""
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        return 0.0
    roots = np.roots(np.concatenate(([1.0], sign * c)))
    return float(np.max(np.abs(roots))) if roots.size else 0.0


def stabilize_poly(coeffs: np.ndarray, sign: float) -> tuple[np.ndarray, bool]:
    """Reflect characteristic roots with modulus >= 1 inside the unit circle.

    ``sign`` is -1 for the AR convention (roots of z^p - a_1 z^(p-1) - ...)
    and +1 for the MA convention.  Reflected roots land at 1/modulus, clamped
    at radius :data:`CLAMP_RADIUS`.  Returns (new coefficients, changed flag).
    """
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        return c, False
    roots = np.roots(np.concatenate(([1.0], sign * c)))
    mags = np.abs(roots)
    if np.all(mags < 1.0):
        return c, False
    bad = mags >= 1.0
    new_mags = np.where(bad, np.minimum(1.0 / np.maximum(mags, 1e-300), CLAMP_RADIUS), mags)
    scale = np.where(mags > 0, new_mags / np.maximum(mags, 1e-300), 0.0)
    fixed_poly = np.poly(roots * scale)
    return sign * np.real(fixed_poly[1:]), True


@dataclass(frozen=True)
class ArmaModel:
    """``y_t = mean + z_t`` with ``z_t = sum a_i z_{t-i} + e_t + sum c_j e_{t-j}``.

    Stability of the AR part and invertibility of the MA part are enforced at
    construction.
    """

    ar: np.ndarray
    ma: np.ndarray
    sigma2: float
    mean: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "ar", np.atleast_1d(np.asarray(self.ar, dtype=float)).ravel())
        object.__setattr__(self, "ma", np.atleast_1d(np.asarray(self.ma, dtype=float)).ravel())
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        if _char_root_radius(self.ar, -1.0) >= 1.0:
            raise ValueError("AR polynomial is not stable")
        if _char_root_radius(self.ma, +1.0) >= 1.0:
            raise ValueError("MA polynomial is not invertible")

    @property
    def na(self) -> int:
        return int(self.ar.size)

    @property
    def nc(self) -> int:
        return int(self.ma.size)

    @property
    def n_params(self) -> int:
        return self.na + self.nc

    def ar_poly(self) -> np.ndarray:
        """[1, -a_1, ..., -a_na]; denominator of the e->y transfer."""
        return np.concatenate(([1.0], -self.ar))

    def ma_poly(self) -> np.ndarray:
        """[1, c_1, ..., c_nc]; numerator of the e->y transfer."""
        return np.concatenate(([1.0], self.ma))


@dataclass(frozen=True)
class ExogenousTerm:
    """One exogenous input: ``sum_j b[j] * u_{t - delay - j}``."""

    name: str
    b: np.ndarray
    delay: int
    input_mean: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "b", np.atleast_1d(np.asarray(self.b, dtype=float)).ravel())
        if self.delay < 0:
            raise ValueError("delay must be >= 0")
        if self.b.size == 0:
            raise ValueError("b must be non-empty")

    @property
    def nb(self) -> int:
        return int(self.b.size)


@dataclass(frozen=True)
class ArmaxModel(ArmaModel):
    """ARMA dynamics plus a non-empty list of exogenous input terms."""

    inputs: tuple[ExogenousTerm, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.inputs:
            raise ValueError("ArmaxModel requires at least one exogenous input")

    @property
    def n_params(self) -> int:
        return self.na + self.nc + sum(term.nb for term in self.inputs)


def _is_degenerate(y: np.ndarray, mean: float) -> bool:
    scale = max(1.0, abs(mean))
    return float(np.var(y)) <= (_DEGENERATE_REL_STD * scale) ** 2


def _long_ar_residuals(y: np.ndarray, order_budget: int) -> tuple[np.ndarray, int]:
    """Stage-1 innovation estimates via a high-order AR fit.

    Returns residuals aligned with ``y`` (zeros before index L) and L itself.
    """
    n = y.shape[0]
    L = max(1, min(order_budget, n // 4))
    r = autocovariance(y, L)
    model = levinson_durbin(r, L).model
    e = lfilter(np.concatenate(([1.0], -model.coefficients)), [1.0], y)
    e[:L] = 0.0
    return e, L


def fit_arma(values: np.ndarray, na: int, nc: int, mean: float | None = None) -> ArmaModel:
    """Two-stage ARMA fit on a complete series.

    Stage 1 fits an AR of order ``min(4*(na+nc), N/4)`` to estimate the
    innovations; stage 2 regresses ``y_t`` on lagged outputs and lagged
    innovation estimates.  The returned model is always stable/invertible
    (offending roots reflected, variance refit).
    """
    y_raw = np.asarray(values, dtype=float)
    if y_raw.ndim != 1:
        raise ValueError("values must be one-dimensional")
    if np.isnan(y_raw).any():
        raise ValueError("fit_arma requires a complete series")
    if na < 0 or nc < 0:
        raise ValueError("orders must be >= 0")
    n = y_raw.shape[0]
    if na + nc > 0 and n < 10 * (na + nc):
        raise ValueError(f"need at least {10 * (na + nc)} samples for ARMA({na},{nc}), got {n}")
    mu = float(y_raw.mean()) if mean is None else float(mean)
    y = y_raw - mu

    if na == 0 and nc == 0:
        return ArmaModel(np.zeros(0), np.zeros(0), float(np.mean(y**2)), mu)
    if _is_degenerate(y, mu):
        return ArmaModel(np.zeros(0), np.zeros(0), 0.0, mu)

    if nc > 0:
        e_hat, L = _long_ar_residuals(y, 4 * (na + nc))
    else:
        e_hat, L = np.zeros(n), 0

    t0 = max(na, L + nc)
    rows = n - t0
    ncols = na + nc
    if rows <= ncols:
        raise ValueError(f"series too short: {rows} usable rows for {ncols} parameters")
    cols = [np.stack([y[t0 - i : n - i] for i in range(1, na + 1)], axis=1)] if na else []
    if nc:
        cols.append(np.stack([e_hat[t0 - j : n - j] for j in range(1, nc + 1)], axis=1))
    X = np.hstack(cols)
    theta, _, rank, _ = np.linalg.lstsq(X, y[t0:], rcond=None)
    if rank < ncols:
        raise ValueError(f"rank-deficient ARMA regression (rank {rank} < {ncols})")
    a, c = theta[:na], theta[na:]
    resid = y[t0:] - X @ theta
    sigma2 = float(np.mean(resid**2))

    a, a_changed = stabilize_poly(a, -1.0)
    c, c_changed = stabilize_poly(c, +1.0)
    model = ArmaModel(a, c, sigma2, mu)
    if a_changed or c_changed:
        e = arma_innovations(model, y_raw)
        sigma2 = float(np.mean(e[t0:] ** 2))
        model = ArmaModel(a, c, sigma2, mu)
    return model


def fit_armax(
    values: np.ndarray,
    inputs: list[tuple[str, np.ndarray]],
    na: int,
    nb: list[int],
    nc: int,
    nk: list[int],
    mean: float | None = None,
) -> ArmaxModel:
    """Extended least squares: ARMA stage-1 residuals, then one regression of
    ``y_t`` on lagged y, delayed lagged inputs, and lagged residuals.

    Raises :class:`CollinearInputError` naming the offending input when the
    regression matrix is rank-deficient.
    """
    y_raw = np.asarray(values, dtype=float)
    if not inputs:
        raise ValueError("fit_armax requires at least one exogenous input")
    if len(nb) != len(inputs) or len(nk) != len(inputs):
        raise ValueError("nb and nk must match the number of inputs")
    if any(b < 1 for b in nb) or any(k < 0 for k in nk):
        raise ValueError("each nb must be >= 1 and each nk >= 0")
    n = y_raw.shape[0]
    u_raw = []
    for name, u in inputs:
        u = np.asarray(u, dtype=float)
        if u.shape != y_raw.shape:
            raise ValueError(f"input {name!r} is not on the target grid")
        if np.isnan(u).any():
            raise ValueError(f"input {name!r} contains missing samples")
        u_raw.append((name, u))
    if np.isnan(y_raw).any():
        raise ValueError("fit_armax requires a complete series")
    total_params = na + nc + sum(nb)
    if n < 10 * max(total_params, 1):
        raise ValueError(f"need at least {10 * total_params} samples for {total_params} parameters")

    mu = float(y_raw.mean()) if mean is None else float(mean)
    y = y_raw - mu
    u_means = [float(u.mean()) for _, u in u_raw]
    u_cent = [u - m for (_, u), m in zip(u_raw, u_means)]

    if nc > 0 and not _is_degenerate(y, mu):
        e_hat, L = _long_ar_residuals(y, 4 * (na + nc))
    else:
        e_hat, L = np.zeros(n), 0

    t0 = max([na, L + nc] + [nk[i] + nb[i] for i in range(len(inputs))])
    ncols = total_params
    if n - t0 <= ncols:
        raise ValueError(f"series too short: {n - t0} usable rows for {ncols} parameters")

    col_owner: list[str] = []
    cols = []
    for i in range(1, na + 1):
        cols.append(y[t0 - i : n - i])
        col_owner.append("output lags")
    for (name, _), u, d, b_ord in zip(u_raw, u_cent, nk, nb):
        for j in range(b_ord):
            lag = d + j
            cols.append(u[t0 - lag : n - lag] if lag else u[t0:n])
            col_owner.append(name)
    for j in range(1, nc + 1):
        cols.append(e_hat[t0 - j : n - j])
        col_owner.append("innovation lags")
    X = np.stack(cols, axis=1)

    theta, _, rank, _ = np.linalg.lstsq(X, y[t0:], rcond=None)
    if rank < ncols:
        # Pivoted QR localizes which columns fail to add rank.
        from scipy.linalg import qr

        _, R, piv = qr(X, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        tol = diag[0] * max(X.shape) * np.finfo(float).eps if diag.size and diag[0] > 0 else 0.0
        offenders = sorted({col_owner[piv[i]] for i in range(len(diag)) if diag[i] <= tol} | (
            {col_owner[p] for p in piv[len(diag):]}
        ))
        raise CollinearInputError(offenders or sorted(set(col_owner)))

    pos = na
    terms = []
    for (name, _), m, d, b_ord in zip(u_raw, u_means, nk, nb):
        terms.append(ExogenousTerm(name, theta[pos : pos + b_ord], d, m))
        pos += b_ord
    a, c = theta[:na], theta[pos:]
    resid = y[t0:] - X @ theta
    sigma2 = float(np.mean(resid**2))

    a, a_changed = stabilize_poly(a, -1.0)
    c, c_changed = stabilize_poly(c, +1.0)
    model = ArmaxModel(a, c, sigma2, mu, inputs=tuple(terms))
    if a_changed or c_changed:
        e = armax_innovations(model, y_raw, [u for _, u in u_raw])
        sigma2 = float(np.mean(e[t0:] ** 2))
        model = ArmaxModel(a, c, sigma2, mu, inputs=tuple(terms))
    return model


def arma_innovations(model: ArmaModel, values: np.ndarray) -> np.ndarray:
    """One-step prediction residuals over the whole series (zero initial
    conditions): ``e = A(q)/C(q) (y - mean)``."""
    y = np.asarray(values, dtype=float) - model.mean
    return lfilter(model.ar_poly(), model.ma_poly(), y)


def armax_innovations(model: ArmaxModel, values: np.ndarray, inputs: list[np.ndarray]) -> np.ndarray:
    """Residuals ``e = (A(q) y~ - sum_i B_i(q) u~_i) / C(q)`` with zero init."""
    if len(inputs) != len(model.inputs):
        raise ValueError("input count does not match the model")
    y = np.asarray(values, dtype=float) - model.mean
    z = lfilter(model.ar_poly(), [1.0], y)
    for term, u in zip(model.inputs, inputs):
        u = np.asarray(u, dtype=float) - term.input_mean
        b_poly = np.concatenate([np.zeros(term.delay), term.b])
        z -= lfilter(b_poly, [1.0], u)
    return lfilter([1.0], model.ma_poly(), z)


def arma_forecast(model: ArmaModel, values: np.ndarray, horizon: int) -> np.ndarray:
    """Recursive h-step forecast with future innovations set to zero."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    y = np.asarray(values, dtype=float) - model.mean
    e = arma_innovations(model, values)
    n = y.shape[0]
    buf_y = np.concatenate([y, np.zeros(horizon)])
    buf_e = np.concatenate([e, np.zeros(horizon)])
    for k in range(horizon):
        t = n + k
        acc = 0.0
        for i in range(1, model.na + 1):
            if t - i >= 0:
                acc += model.ar[i - 1] * buf_y[t - i]
        for j in range(1, model.nc + 1):
            if t - j >= 0:
                acc += model.ma[j - 1] * buf_e[t - j]
        buf_y[t] = acc
    return buf_y[n:] + model.mean


def armax_forecast(
    model: ArmaxModel,
    values: np.ndarray,
    inputs: list[np.ndarray],
    input_futures: list[np.ndarray],
    horizon: int,
) -> np.ndarray:
    """h-step ARMAX forecast; future input values must be supplied."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if len(inputs) != len(model.inputs) or len(input_futures) != len(model.inputs):
        raise ValueError("input count does not match the model")
    y = np.asarray(values, dtype=float) - model.mean
    e = armax_innovations(model, values, inputs)
    n = y.shape[0]
    buf_y = np.concatenate([y, np.zeros(horizon)])
    buf_e = np.concatenate([e, np.zeros(horizon)])
    buf_u = []
    for term, u_past, u_fut in zip(model.inputs, inputs, input_futures):
        u_fut = np.asarray(u_fut, dtype=float)
        if u_fut.shape[0] < horizon:
            raise ValueError(f"input {term.name!r}: need {horizon} future values")
        buf_u.append(np.concatenate([np.asarray(u_past, dtype=float), u_fut[:horizon]]) - term.input_mean)
    for k in range(horizon):
        t = n + k
        acc = 0.0
        for i in range(1, model.na + 1):
            if t - i >= 0:
                acc += model.ar[i - 1] * buf_y[t - i]
        for term, u in zip(model.inputs, buf_u):
            for j in range(term.nb):
                lag = term.delay + j
                if t - lag >= 0:
                    acc += term.b[j] * u[t - lag]
        for j in range(1, model.nc + 1):
            if t - j >= 0:
                acc += model.ma[j - 1] * buf_e[t - j]
        buf_y[t] = acc
    return buf_y[n:] + model.mean


def psi_weights(model: ArmaModel, count: int) -> np.ndarray:
    """First ``count`` impulse-response weights of C(q)/A(q); psi_0 = 1."""
    if count < 1:
        raise ValueError("count must be >= 1")
    impulse = np.zeros(count)
    impulse[0] = 1.0
    return lfilter(model.ma_poly(), model.ar_poly(), impulse)
