import math
from typing import Tuple

import numpy as np

from src.core.errors import DiagnosticError
from src.diagnostics.models import CorrelogramResult
from src.series_core.models import TimeSeries

Z_95 = 1.96


def _band(n: int) -> float:
    return Z_95 / math.sqrt(n)


def _autocorrelations(x: np.ndarray, max_lag: int) -> np.ndarray:
    # Biased (1/n) normalizer keeps the sequence positive semidefinite
    centered = x - x.mean()
    denominator = float(np.dot(centered, centered))
    if denominator == 0.0:
        raise DiagnosticError("series has zero variance")
    n = len(x)
    return np.array([np.dot(centered[: n - k], centered[k:]) / denominator for k in range(max_lag + 1)])


def acf(ts: TimeSeries, max_lag: int) -> CorrelogramResult:
    x = ts.array
    if not 0 <= max_lag < len(x):
        raise DiagnosticError(f"max_lag must be in [0, {len(x) - 1}], got {max_lag}")
    rho = _autocorrelations(x, max_lag)
    rho[0] = 1.0
    return CorrelogramResult(values=rho.tolist(), band=_band(len(x)))


def pacf(ts: TimeSeries, max_lag: int) -> CorrelogramResult:
    """Durbin-Levinson recursion over the sample ACF."""
    x = ts.array
    if not 0 <= max_lag < len(x) / 2:
        raise DiagnosticError(f"max_lag must be below n/2 = {len(x) / 2}, got {max_lag}")
    rho = _autocorrelations(x, max_lag)

    partial = np.zeros(max_lag + 1)
    partial[0] = 1.0
    phi = np.zeros(0)
    variance = 1.0
    for k in range(1, max_lag + 1):
        reflection = (rho[k] - np.dot(phi, rho[k - 1:0:-1])) / variance
        phi = np.concatenate((phi - reflection * phi[::-1], [reflection]))
        variance *= 1.0 - reflection**2
        partial[k] = reflection
    return CorrelogramResult(values=np.clip(partial, -1.0, 1.0).tolist(), band=_band(len(x)))


def suggest_orders(acf_result: CorrelogramResult, pacf_result: CorrelogramResult) -> Tuple[int, int]:
    """
    (p, q): the largest lag whose PACF (for p) or ACF (for q) leaves the
    confidence band; 0 when nothing does.
    """
    def last_significant(result: CorrelogramResult) -> int:
        lags = [k for k in range(1, len(result.values)) if abs(result.values[k]) > result.band]
        return max(lags, default=0)

    return last_significant(pacf_result), last_significant(acf_result)
