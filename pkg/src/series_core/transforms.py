import logging
import math
from typing import Tuple

import numpy as np
import pandas as pd

from src.core.errors import ConfigError, TransformError
from src.series_core.models import (
    DIFFERENCING_KINDS,
    ArcsinBounds,
    SplitSpec,
    TimeSeries,
    TransformKind,
    TransformState,
)

logger = logging.getLogger(__name__)

HALF_PI = math.pi / 2


def train_test_split(ts: TimeSeries, spec: SplitSpec) -> Tuple[TimeSeries, TimeSeries]:
    """Chronological split: the first ceil(n*(1-f)) points train, the rest test."""
    n = len(ts)
    # round() keeps 0.7*100 from turning into 70.00000000000001
    n_train = math.ceil(round(n * (1.0 - spec.test_fraction), 9))
    n_test = n - n_train
    if n_train < 2 or n_test < 1:
        raise ConfigError(f"test_fraction={spec.test_fraction} on {n} points leaves train={n_train}, test={n_test}")
    logger.debug("Split %d points into %d train / %d test", n, n_train, n_test)
    values = ts.array
    return ts.with_values(values[:n_train]), ts.with_values(values[n_train:], offset=n_train)


# --- Differencing ---
def difference(ts: TimeSeries, d: int = 1, seasonal_lag: int = 0) -> Tuple[TimeSeries, TransformState]:
    """
    d successive lag-1 passes, then one lag-`seasonal_lag` pass when it is > 0.
    Callers loop for more than one seasonal pass.
    """
    if d < 0 or seasonal_lag < 0:
        raise TransformError("differencing orders must be non-negative")
    lags = [1] * d + ([seasonal_lag] if seasonal_lag > 0 else [])
    if len(ts) <= sum(lags):
        raise TransformError(f"series of length {len(ts)} too short for differencing lags {lags}")

    y = ts.array
    seeds, tails = [], []
    for lag in lags:
        seeds.append(tuple(y[:lag]))
        tails.append(tuple(y[-lag:]))
        y = y[lag:] - y[:-lag]

    kind = TransformKind.SEASONAL_DIFFERENCE if seasonal_lag > 0 else TransformKind.DIFFERENCE
    state = TransformState(
        kind=kind,
        lags=tuple(lags),
        seeds=tuple(seeds),
        tails=tuple(tails),
        params={"d": d, "seasonal_lag": seasonal_lag},
    )
    return ts.with_values(y, offset=sum(lags)), state


def _integrate(deltas: np.ndarray, head: np.ndarray, lag: int) -> np.ndarray:
    # out[:lag] = head; out[t + lag] = deltas[t] + out[t]
    out = np.empty(len(deltas) + lag)
    for r in range(lag):
        out[r::lag] = np.cumsum(np.concatenate(([head[r]], deltas[r::lag])))
    return out


def undifference(diffed: TimeSeries, state: TransformState, continuation: bool = False) -> TimeSeries:
    """
    Inverse of `difference`. With continuation=True the input is read as
    differenced forecasts that follow the observed data, and the stored tails
    (last observed values per pass) seed the integration instead.
    """
    if state.kind not in DIFFERENCING_KINDS:
        raise TransformError(f"cannot undifference with a {state.kind.value} state")

    y = diffed.array
    for lag, seed, tail in reversed(list(zip(state.lags, state.seeds, state.tails))):
        if continuation:
            y = _integrate(y, np.asarray(tail), lag)[lag:]
        else:
            y = _integrate(y, np.asarray(seed), lag)

    if continuation:
        return diffed.with_values(y)
    return diffed.with_values(y, offset=-sum(state.lags))


# --- Arcsin scaling ---
def _affine_edges(margin: float) -> Tuple[float, float]:
    return -1.0 + margin, 1.0 - margin


def _arcsin_with_bounds(values: np.ndarray, bounds: ArcsinBounds, clip: bool) -> np.ndarray:
    lo, hi = _affine_edges(bounds.margin)
    u = lo + (values - bounds.minimum) / (bounds.maximum - bounds.minimum) * (hi - lo)
    if clip:
        u = np.clip(u, -1.0, 1.0)
    return np.arcsin(u)


def arcsin_transform(ts: TimeSeries, margin: float = 1e-3) -> Tuple[TimeSeries, TransformState]:
    """Maps [min, max] affinely onto [-1+margin, 1-margin], then takes arcsin."""
    x = ts.array
    if len(x) < 2 or not x.max() > x.min():
        raise TransformError("arcsin transform needs at least two distinct values")
    bounds = ArcsinBounds(minimum=float(x.min()), maximum=float(x.max()), margin=margin)
    state = TransformState(kind=TransformKind.ARCSIN_MINMAX, bounds=bounds, params={"margin": margin})
    return ts.with_values(_arcsin_with_bounds(x, bounds, clip=False)), state


def sin_restore(ts: TimeSeries, state: TransformState) -> TimeSeries:
    if state.kind != TransformKind.ARCSIN_MINMAX:
        raise TransformError(f"cannot sin-restore with a {state.kind.value} state")
    bounds = state.bounds
    lo, hi = _affine_edges(bounds.margin)
    # Forecasts may overshoot arcsin's range; sin stays monotone only on [-pi/2, pi/2]
    u = np.sin(np.clip(ts.array, -HALF_PI, HALF_PI))
    x = bounds.minimum + (u - lo) / (hi - lo) * (bounds.maximum - bounds.minimum)
    return ts.with_values(x)


# --- Log ---
def log_transform(ts: TimeSeries) -> Tuple[TimeSeries, TransformState]:
    """log(1 + x), so zero counts stay finite."""
    x = ts.array
    if np.any(x <= -1.0):
        raise TransformError("log transform needs every value > -1")
    return ts.with_values(np.log1p(x)), TransformState(kind=TransformKind.LOG)


def exp_restore(ts: TimeSeries, state: TransformState) -> TimeSeries:
    if state.kind != TransformKind.LOG:
        raise TransformError(f"cannot exp-restore with a {state.kind.value} state")
    return ts.with_values(np.expm1(ts.array))


# --- Smoothing (non-invertible) ---
def moving_average(ts: TimeSeries, window: int) -> Tuple[TimeSeries, TransformState]:
    """Trailing-window mean; output starts at the first full window."""
    if window < 1 or window > len(ts):
        raise TransformError(f"moving-average window must be in [1, {len(ts)}], got {window}")
    smoothed = pd.Series(ts.array).rolling(window).mean().to_numpy()[window - 1:]
    state = TransformState(kind=TransformKind.MOVING_AVERAGE, params={"window": window})
    return ts.with_values(smoothed, offset=window - 1), state


def ewma(ts: TimeSeries, alpha: float) -> Tuple[TimeSeries, TransformState]:
    """y_0 = x_0, y_t = alpha*x_t + (1-alpha)*y_{t-1}."""
    if not 0.0 < alpha <= 1.0:
        raise TransformError(f"ewma alpha must be in (0, 1], got {alpha}")
    smoothed = pd.Series(ts.array).ewm(alpha=alpha, adjust=False).mean().to_numpy()
    state = TransformState(kind=TransformKind.EWMA, params={"alpha": alpha})
    return ts.with_values(smoothed), state


# --- Re-applying fitted pointwise transforms ---
def apply_with_state(ts: TimeSeries, state: TransformState) -> TimeSeries:
    """
    Maps new data (e.g. a test slice) into the units of a transform fitted
    elsewhere. Arcsin reuses the fitted bounds and clips to arcsin's domain.
    """
    if state.kind == TransformKind.ARCSIN_MINMAX:
        return ts.with_values(_arcsin_with_bounds(ts.array, state.bounds, clip=True))
    if state.kind == TransformKind.LOG:
        return log_transform(ts)[0]
    raise TransformError(f"{state.kind.value} is not a pointwise transform")


def restore_pointwise(ts: TimeSeries, state: TransformState) -> TimeSeries:
    """Pointwise inverse; smoothing kinds pass values through unchanged."""
    if state.kind == TransformKind.ARCSIN_MINMAX:
        return sin_restore(ts, state)
    if state.kind == TransformKind.LOG:
        return exp_restore(ts, state)
    if not state.invertible:
        return ts
    raise TransformError(f"{state.kind.value} has no pointwise inverse")

