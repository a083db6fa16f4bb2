"""Innovations-form state-space models and Kalman prediction.

The realization used throughout is ``x_{t+1} = A x_t + K e_t``,
``y_t = C x_t + mean + e_t`` with scalar innovations of variance sigma2.
Because the state is a deterministic function of past outputs, filtering
reduces to an exact observer; prediction uncertainty appears only beyond the
measuring horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import hankel

from .arma import ArmaModel, psi_weights

__all__ = ["StateSpaceModel", "KalmanPrediction", "to_statespace", "kalman_predict", "era_realization"]

#: Relative tolerance on covariance eigenvalues before clamping is an error.
_COV_CLAMP_TOL = 1e-6


@dataclass(frozen=True)
class StateSpaceModel:
    """Innovations-form realization with spectral radius < 1."""

    A: np.ndarray
    K: np.ndarray
    C: np.ndarray
    sigma2: float
    mean: float = 0.0

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.size == 0:
            A = np.zeros((0, 0))
        K = np.asarray(self.K, dtype=float).reshape(-1)
        C = np.asarray(self.C, dtype=float).reshape(-1)
        n = A.shape[0]
        if A.shape != (n, n) or K.shape != (n,) or C.shape != (n,):
            raise ValueError("inconsistent state-space dimensions")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        if n and np.max(np.abs(np.linalg.eigvals(A))) >= 1.0:
            raise ValueError("transition matrix must have spectral radius < 1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "C", C)

    @property
    def order(self) -> int:
        return int(self.A.shape[0])

    def impulse_response(self, count: int) -> np.ndarray:
        """psi_0..psi_{count-1} of the e->y transfer (psi_0 = 1)."""
        psi = np.empty(count)
        psi[0] = 1.0
        x = self.K.copy()
        for k in range(1, count):
            psi[k] = float(self.C @ x)
            x = self.A @ x
        return psi


@dataclass(frozen=True)
class KalmanPrediction:
    """Filter innovations over the data plus the h-step extrapolation."""

    innovations: np.ndarray
    forecasts: np.ndarray
    variances: np.ndarray


def to_statespace(model: ArmaModel) -> StateSpaceModel:
    """Observable-canonical innovations realization of a stable ARMA model.

    With n = max(na, nc), phi/theta zero-padded to n: A is the companion
    matrix of the AR polynomial, C picks the first state, and K_i =
    theta_i + phi_i, which reproduces the ARMA transfer function exactly.
    """
    n = max(model.na, model.nc)
    phi = np.zeros(n)
    phi[: model.na] = model.ar
    theta = np.zeros(n)
    theta[: model.nc] = model.ma
    A = np.zeros((n, n))
    if n:
        A[:, 0] = phi
        A[: n - 1, 1:] = np.eye(n - 1)
    K = theta + phi
    C = np.zeros(n)
    if n:
        C[0] = 1.0
    return StateSpaceModel(A, K, C, model.sigma2, model.mean)


def kalman_predict(
    ss: StateSpaceModel,
    values: np.ndarray,
    horizon: int,
    initial_state: np.ndarray | None = None,
) -> KalmanPrediction:
    """Run the innovations filter over ``values`` then extrapolate ``horizon``
    steps with no measurement updates.

    The filter is exact for an innovations-form model (state covariance stays
    at its zero fixed point), so uncertainty enters only through future
    innovations: the prediction variance sequence is a cumulative sum of
    squared impulse-response weights scaled by sigma2, hence non-decreasing.

    Raises ValueError if covariance symmetrization/clamping exceeds tolerance
    (cannot happen for finite stable models, but guarded for safety).
    """
    y = np.asarray(values, dtype=float) - ss.mean
    if np.isnan(y).any():
        raise ValueError("kalman_predict requires a complete series")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    n = ss.order
    x = np.zeros(n) if initial_state is None else np.asarray(initial_state, dtype=float).copy()

    innovations = np.empty(y.shape[0])
    for t in range(y.shape[0]):
        e = y[t] - float(ss.C @ x) if n else y[t]
        innovations[t] = e
        if n:
            x = ss.A @ x + ss.K * e

    forecasts = np.empty(horizon)
    variances = np.empty(horizon)
    P = np.zeros((n, n))
    Q = ss.sigma2 * np.outer(ss.K, ss.K) if n else None
    # The output variance is accumulated term by term (sigma2 * psi_k^2); for
    # an innovations model this equals C P C' + sigma2 from the covariance
    # recursion below, but the cumulative form keeps monotonicity exact in
    # floating point.
    var_acc = ss.sigma2
    v = ss.K.copy()
    for k in range(horizon):
        forecasts[k] = (float(ss.C @ x) if n else 0.0) + ss.mean
        variances[k] = var_acc
        if n:
            x = ss.A @ x
            var_acc = var_acc + ss.sigma2 * float(ss.C @ v) ** 2
            v = ss.A @ v
            P = ss.A @ P @ ss.A.T + Q
            P = 0.5 * (P + P.T)
            eigvals = np.linalg.eigvalsh(P)
            floor = float(eigvals[0])
            if floor < 0:
                scale = max(float(eigvals[-1]), ss.sigma2, 1.0)
                if -floor > _COV_CLAMP_TOL * scale:
                    raise ValueError("prediction covariance lost positive semi-definiteness")
                P = P - floor * np.eye(n)
    return KalmanPrediction(innovations, forecasts, variances)


def era_realization(markov: np.ndarray, order: int, sigma2: float, mean: float = 0.0) -> StateSpaceModel:
    """Eigensystem-realization of an innovations model from its impulse
    response ``markov = [psi_0=1, psi_1, psi_2, ...]``.

    Builds the Hankel matrix of psi_1.., truncates its SVD at ``order`` and
    recovers (A, K, C).  With ``order`` equal to the true minimal order the
    transfer function is reproduced to numerical precision; other orders give
    the truncated/inflated realizations used by the state-dimension search.
    """
    psi = np.asarray(markov, dtype=float)
    if order < 1:
        raise ValueError("order must be >= 1")
    m = order + 1
    if psi.shape[0] < 2 * m + 1:
        raise ValueError(f"need at least {2 * m + 1} impulse-response samples")
    H0 = hankel(psi[1 : m + 1], psi[m : 2 * m])
    H1 = hankel(psi[2 : m + 2], psi[m + 1 : 2 * m + 1])
    U, s, Vt = np.linalg.svd(H0)
    # Floor tiny singular values: inflated orders beyond the true rank are
    # intentionally ill-conditioned (that is the sensitivity being studied),
    # but the math must stay finite.
    s_floor = np.maximum(s[:order], max(s[0], 1e-300) * 1e-12)
    sqrt_s = np.sqrt(s_floor)
    Un, Vn = U[:, :order], Vt[:order, :].T
    A = (Un / sqrt_s).T @ H1 @ (Vn / sqrt_s)
    C = Un[0, :] * sqrt_s
    K = Vn[0, :] * sqrt_s
    # Keep the realization usable by the Kalman recursions: pull any unstable
    # eigenvalue back inside the unit circle by uniform shrinkage.
    if A.size:
        rho = float(np.max(np.abs(np.linalg.eigvals(A))))
        if rho >= 1.0:
            A = A * (0.99 / rho)
    return StateSpaceModel(A, K, C, sigma2, mean)


def realize_arma(model: ArmaModel, order: int | None = None) -> StateSpaceModel:
    """State-space realization of an ARMA model at a chosen state dimension.

    ``order None`` or the natural dimension max(na, nc) uses the exact
    canonical form; any other dimension goes through the Hankel-SVD route.
    """
    natural = max(model.na, model.nc)
    if order is None or order == natural or natural == 0:
        return to_statespace(model)
    count = max(2 * (order + 1) + 2, 24)
    return era_realization(psi_weights(model, count), order, model.sigma2, model.mean)
