from typing import Optional

import numpy as np
from pydantic import BaseModel

from src.core.errors import DiagnosticError
from src.series_core.models import PartialSeries, TimeSeries


class Decomposition(BaseModel):
    trend: PartialSeries
    seasonal: PartialSeries
    residual: PartialSeries
    period: int


def _centered_weights(period: int) -> np.ndarray:
    # Even periods use the 2 x m average: half weight on both ends
    if period % 2 == 0:
        weights = np.ones(period + 1)
        weights[0] = weights[-1] = 0.5
    else:
        weights = np.ones(period)
    return weights / period


def _as_partial(ts: TimeSeries, values: np.ndarray, defined: np.ndarray) -> PartialSeries:
    slots: list[Optional[float]] = [float(v) if ok else None for v, ok in zip(values, defined)]
    return PartialSeries(start=ts.start, step_months=ts.step_months, values=tuple(slots))


def decompose(ts: TimeSeries, period: int) -> Decomposition:
    """
    Classical additive decomposition x = trend + seasonal + residual.
    Trend and residual are missing in the first and last floor(period/2) slots.
    """
    x = ts.array
    n = len(x)
    if period < 2:
        raise DiagnosticError("decomposition period must be >= 2")
    if n < 2 * period:
        raise DiagnosticError(f"series of length {n} is shorter than two periods of {period}")

    # 1. Trend: centered moving average
    half = period // 2
    trend = np.full(n, np.nan)
    trend[half:n - half] = np.convolve(x, _centered_weights(period), mode="valid")
    defined = np.zeros(n, dtype=bool)
    defined[half:n - half] = True

    # 2. Seasonal: per-phase mean of the detrended values, centered to sum 0
    detrended = x - trend
    phase_means = np.array([detrended[phase::period][defined[phase::period]].mean() for phase in range(period)])
    phase_means -= phase_means.mean()
    seasonal = np.resize(phase_means, n)

    # 3. Residual
    residual = x - trend - seasonal

    return Decomposition(
        trend=_as_partial(ts, trend, defined),
        seasonal=_as_partial(ts, seasonal, np.ones(n, dtype=bool)),
        residual=_as_partial(ts, residual, defined),
        period=period,
    )
