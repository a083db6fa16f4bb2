"""System-identification primitives: autocovariance, Levinson-Durbin, ARMA and
ARMAX estimation, state-space realization with Kalman prediction, Daubechies
wavelet analysis, and order selection."""

from .arma import (
    ArmaModel,
    ArmaxModel,
    CollinearInputError,
    ExogenousTerm,
    arma_forecast,
    arma_innovations,
    armax_forecast,
    armax_innovations,
    fit_arma,
    fit_armax,
    psi_weights,
    stabilize_poly,
)
from .correlation import ArModel, LevinsonResult, autocovariance, levinson_durbin
from .order import CellResult, FitCandidate, OrderGrid, SelectionResult, select_order
from .statespace import (
    KalmanPrediction,
    StateSpaceModel,
    era_realization,
    kalman_predict,
    realize_arma,
    to_statespace,
)
from .wavelet import WaveletDecomposition, daubechies_filters, dwt, idwt

__all__ = [
    "ArModel",
    "ArmaModel",
    "ArmaxModel",
    "CellResult",
    "CollinearInputError",
    "ExogenousTerm",
    "FitCandidate",
    "KalmanPrediction",
    "LevinsonResult",
    "OrderGrid",
    "SelectionResult",
    "StateSpaceModel",
    "WaveletDecomposition",
    "arma_forecast",
    "arma_innovations",
    "armax_forecast",
    "armax_innovations",
    "autocovariance",
    "daubechies_filters",
    "dwt",
    "era_realization",
    "fit_arma",
    "fit_armax",
    "idwt",
    "kalman_predict",
    "levinson_durbin",
    "psi_weights",
    "realize_arma",
    "select_order",
    "stabilize_poly",
    "to_statespace",
]
