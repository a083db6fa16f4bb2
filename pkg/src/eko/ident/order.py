"""Model-order selection over a candidate grid.

Two criteria are supported: BIC (fit once on the whole series) and
validation PQ (fit on the first 80%, score a forecast of the last 20%).
Grid cells are independent, so callers may evaluate them in parallel; the
selection itself is a deterministic reduction independent of evaluation
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Protocol

import numpy as np

from ..quality import prediction_quality

__all__ = ["OrderGrid", "FitCandidate", "CellResult", "SelectionResult", "select_order"]

VALIDATION_FRACTION = 0.2


class FitCandidate(Protocol):
    """What a fit callback must return for a grid cell."""

    sigma2: float
    n_params: int

    def forecast(self, horizon: int) -> tuple[np.ndarray, np.ndarray]:
        """(predicted values, tube radii) for the next ``horizon`` steps."""
        ...


@dataclass(frozen=True)
class OrderGrid:
    """Inclusive integer ranges per order name, e.g. {"na": (0, 4)}."""

    ranges: dict[str, tuple[int, int]]
    criterion: str = "bic"  # "bic" | "validation_pq"

    def __post_init__(self) -> None:
        if not self.ranges:
            raise ValueError("order grid must have at least one range")
        for name, (lo, hi) in self.ranges.items():
            if lo > hi:
                raise ValueError(f"range for {name!r} is empty: ({lo}, {hi})")
        if self.criterion not in ("bic", "validation_pq"):
            raise ValueError(f"unknown criterion {self.criterion!r}")

    def cells(self) -> list[dict[str, int]]:
        names = list(self.ranges)
        spans = [range(self.ranges[n][0], self.ranges[n][1] + 1) for n in names]
        return [dict(zip(names, combo)) for combo in product(*spans)]


@dataclass(frozen=True)
class CellResult:
    orders: dict[str, int]
    criterion_value: float | None
    n_params: int | None
    error: str | None


@dataclass(frozen=True)
class SelectionResult:
    orders: dict[str, int]
    candidate: FitCandidate
    table: tuple[CellResult, ...]
    criterion: str


def bic(n: int, sigma2: float, n_params: int) -> float:
    """N*ln(sigma2) + k*ln(N); sigma2 floored to keep the value finite."""
    return n * math.log(max(sigma2, 1e-300)) + n_params * math.log(n)


def _tie_key(orders: dict[str, int], n_params: int) -> tuple:
    rest = tuple(v for k, v in sorted(orders.items()) if k != "na")
    return (n_params, orders.get("na", 0), rest)


def select_order(
    values: np.ndarray,
    grid: OrderGrid,
    fit_fn: Callable[[np.ndarray, dict[str, int]], FitCandidate],
) -> SelectionResult:
    """Pick the best grid cell for ``values`` under the grid's criterion.

    BIC is minimized; validation PQ is maximized.  Exact criterion ties break
    toward fewer parameters, then lower ``na``, then the remaining orders, so
    the result does not depend on grid enumeration or scheduling order.
    """
    y = np.asarray(values, dtype=float)
    n = y.shape[0]
    cells = grid.cells()

    if grid.criterion == "validation_pq":
        n_val = max(1, int(round(VALIDATION_FRACTION * n)))
        if n - n_val < 2:
            raise ValueError(f"series of length {n} too short for a validation split")
        train, tail = y[: n - n_val], y[n - n_val :]
        sigma_y = float(np.std(train))

    table: list[CellResult] = []
    best: tuple | None = None
    best_cell: tuple[dict[str, int], FitCandidate] | None = None
    for orders in cells:
        try:
            if grid.criterion == "bic":
                cand = fit_fn(y, orders)
                value = bic(n, cand.sigma2, cand.n_params)
                rank_value = value
            else:
                cand = fit_fn(train, orders)
                predicted, radii = cand.forecast(n_val)
                if sigma_y <= 0:
                    # Degenerate constant target: fall back to pure error.
                    value = -float(np.sqrt(np.mean((tail - predicted) ** 2)))
                else:
                    value = prediction_quality(tail, predicted, radii, sigma_y).value
                rank_value = -value
        except (ValueError, np.linalg.LinAlgError) as exc:
            table.append(CellResult(orders, None, None, str(exc)))
            continue
        table.append(CellResult(orders, value, cand.n_params, None))
        key = (rank_value, *_tie_key(orders, cand.n_params))
        if best is None or key < best:
            best = key
            best_cell = (orders, cand)

    if best_cell is None:
        failures = "; ".join(f"{c.orders}: {c.error}" for c in table)
        raise ValueError(f"every grid cell failed: {failures}")

    orders, cand = best_cell
    if grid.criterion == "validation_pq":
        # Refit the winning orders on the full series for downstream use.
        cand = fit_fn(y, orders)
    return SelectionResult(orders, cand, tuple(table), grid.criterion)
