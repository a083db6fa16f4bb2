"""Prediction-quality scoring.

PQ compresses two things into one percentage: how close the forecast tracks
withheld truth (accuracy) and how tight its confidence tube is (tightness).
Both are normalized by the target's standard deviation on the measuring
horizon, so PQ is invariant under rescaling of the data.  A tube wider than
+/- 4 standard deviations is treated as uninformative and floors tightness
at zero, which means a predictor cannot buy accuracy with an arbitrarily
wide tube.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PQScore", "prediction_quality"]

#: Tube-width normalization: mean radius equal to this many target standard
#: deviations floors the tightness factor at 0.
TUBE_FLOOR_SIGMAS = 4.0


@dataclass(frozen=True)
class PQScore:
    """Percentage in [0, 100]; value = 100 * accuracy * tightness."""

    value: float
    accuracy: float
    tightness: float


def prediction_quality(
    actual: np.ndarray,
    predicted: np.ndarray,
    radii: np.ndarray,
    sigma_y: float,
) -> PQScore:
    """Score a forecast against withheld truth.

    accuracy  = max(0, 1 - RMSE(actual, predicted) / sigma_y)
    tightness = max(0, 1 - mean(radii) / (4 * sigma_y))
    value     = 100 * accuracy * tightness

    ``sigma_y`` is the standard deviation of the target over the measuring
    horizon and must be > 0.
    """
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if actual.shape != predicted.shape or actual.shape != radii.shape:
        raise ValueError("actual, predicted and radii must have equal lengths")
    if actual.size == 0:
        raise ValueError("cannot score an empty forecast window")
    if not sigma_y > 0:
        raise ValueError("sigma_y must be > 0")
    rmse = float(np.sqrt(np.mean((actual - predicted) ** 2)))
    accuracy = max(0.0, 1.0 - rmse / sigma_y)
    tightness = max(0.0, 1.0 - float(np.mean(radii)) / (TUBE_FLOOR_SIGMAS * sigma_y))
    return PQScore(100.0 * accuracy * tightness, accuracy, tightness)
