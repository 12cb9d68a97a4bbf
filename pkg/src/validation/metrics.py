import logging
import math
from typing import Sequence, Tuple

import numpy as np

from src.core.errors import DimensionError, MetricError
from src.validation.models import MapeResult, RegressionReport

logger = logging.getLogger(__name__)


def _pair(y: Sequence[float], y_hat: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    y, y_hat = np.asarray(y, dtype=float), np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1 or len(y) == 0:
        raise DimensionError(f"metric inputs must be equal-length non-empty vectors, got {y.shape} and {y_hat.shape}")
    return y, y_hat


def mape(y: Sequence[float], y_hat: Sequence[float]) -> MapeResult:
    """Mean absolute percentage error over the points whose target is non-zero."""
    y, y_hat = _pair(y, y_hat)
    nonzero = y != 0.0
    if not nonzero.any():
        raise MetricError("MAPE is undefined when every target is zero")
    value = 100.0 * float(np.mean(np.abs(y[nonzero] - y_hat[nonzero]) / np.abs(y[nonzero])))
    return MapeResult(value=value, excluded=int((~nonzero).sum()))


def grouped_mape(y: Sequence[float], y_hat: Sequence[float], group_size: int) -> MapeResult:
    """MAPE between the means of consecutive groups (the last one may be short)."""
    y, y_hat = _pair(y, y_hat)
    if group_size < 1:
        raise DimensionError(f"group size must be >= 1, got {group_size}")
    edges = np.arange(0, len(y), group_size)
    group_y = np.add.reduceat(y, edges) / np.diff(np.append(edges, len(y)))
    group_hat = np.add.reduceat(y_hat, edges) / np.diff(np.append(edges, len(y)))
    return mape(group_y, group_hat)


def mse(y: Sequence[float], y_hat: Sequence[float]) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))


def rmse(y: Sequence[float], y_hat: Sequence[float]) -> float:
    return math.sqrt(mse(y, y_hat))


def mae(y: Sequence[float], y_hat: Sequence[float]) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def regression_report(y: Sequence[float], y_hat: Sequence[float], group_size: int = 1) -> RegressionReport:
    """All metrics at once; undefined MAPE values are reported as missing."""
    report = {"group_size": group_size, "mse": mse(y, y_hat), "rmse": rmse(y, y_hat), "mae": mae(y, y_hat)}
    try:
        plain = mape(y, y_hat)
        report.update(mape=plain.value, mape_excluded=plain.excluded)
        report["grouped_mape"] = grouped_mape(y, y_hat, group_size).value
    except MetricError as e:
        logger.warning("%s", e)
    return RegressionReport(**report)
