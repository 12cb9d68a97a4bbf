import logging
import math
from typing import List, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, solve_toeplitz
from scipy.optimize import minimize
from scipy.signal import lfilter

from src.arima.models import ArimaSpec, FittedArima, ForecastResult
from src.arima.polynomials import expand_polynomials, is_admissible
from src.core.errors import DiagnosticError, ModelError
from src.diagnostics.correlogram import acf
from src.series_core.models import TimeSeries, TransformState
from src.series_core.transforms import difference, undifference

logger = logging.getLogger(__name__)

# Soft constraint on non-stationary / non-invertible coefficient vectors
ROOT_PENALTY = 1e6
SIMPLEX_STEP = 0.1
SIMPLEX_XATOL = 1e-6
EVALS_PER_DIM = 2000

Coefficients = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


def _split(coefs: Sequence[float], spec: ArimaSpec) -> Coefficients:
    coefs = np.asarray(coefs, dtype=float)
    edges = np.cumsum([spec.p, spec.q, spec.P, spec.Q])
    phi, theta, Phi, Theta, _ = np.split(coefs, edges)
    return phi, theta, Phi, Theta


def unpack_params(params: Sequence[float], spec: ArimaSpec) -> Tuple[float, Coefficients]:
    """params = intercept (when estimated) || phi || theta || Phi || Theta."""
    params = np.asarray(params, dtype=float)
    expected = spec.n_coefficients + int(spec.with_intercept)
    if len(params) != expected:
        raise ModelError(f"{spec.label} expects {expected} parameters, got {len(params)}")
    if spec.with_intercept:
        return float(params[0]), _split(params[1:], spec)
    return 0.0, _split(params, spec)


def _filters(coefs: Coefficients, spec: ArimaSpec) -> Tuple[np.ndarray, np.ndarray]:
    ar, ma = expand_polynomials(spec, *coefs)
    return np.concatenate(([1.0], -ar)), np.concatenate(([1.0], ma))


def css_residuals(params: Sequence[float], series: TimeSeries, spec: ArimaSpec) -> np.ndarray:
    """
    e_t = x_t - c - sum(ar_i x_{t-i}) - sum(ma_j e_{t-j}), presample x and e
    taken as zero. `series` must already be differenced.
    """
    c, coefs = unpack_params(params, spec)
    ar_filter, ma_filter = _filters(coefs, spec)
    u = lfilter(ar_filter, [1.0], series.array)
    return lfilter([1.0], ma_filter, u - c)


def _centered_residuals(x: np.ndarray, coefs: Coefficients, spec: ArimaSpec) -> Tuple[float, np.ndarray]:
    """
    Recursion on x - mu with zero presample, i.e. presample values sit at the
    process mean. Residuals are affine in mu (e = e0 - mu*g), so the best mu
    is closed form. Returns (mu, residuals); mu is 0 without an intercept.
    """
    ar_filter, ma_filter = _filters(coefs, spec)
    with np.errstate(over="ignore", invalid="ignore"):
        e0 = lfilter([1.0], ma_filter, lfilter(ar_filter, [1.0], x))
        if not spec.with_intercept:
            return 0.0, e0
        # g[0] == 1, so g'g >= 1
        g = lfilter([1.0], ma_filter, lfilter(ar_filter, [1.0], np.ones_like(x)))
        mu = float(np.dot(e0, g) / np.dot(g, g))
        return mu, e0 - mu * g


def _objective(coef_vector: np.ndarray, x: np.ndarray, spec: ArimaSpec) -> float:
    coefs = _split(coef_vector, spec)
    _, residuals = _centered_residuals(x, coefs, spec)
    with np.errstate(over="ignore", invalid="ignore"):
        sse = float(np.dot(residuals, residuals))
    if not math.isfinite(sse):
        return math.inf
    if not is_admissible(*coefs):
        # Floored so the penalty survives a zero SSE
        return (sse + 1.0) * ROOT_PENALTY
    return sse


def apply_differencing(series: TimeSeries, spec: ArimaSpec) -> Tuple[TimeSeries, List[TransformState]]:
    """d lag-1 passes, then D lag-m passes."""
    states: List[TransformState] = []
    diffed = series
    if spec.d > 0:
        diffed, state = difference(diffed, d=spec.d)
        states.append(state)
    for _ in range(spec.D):
        diffed, state = difference(diffed, d=0, seasonal_lag=spec.m)
        states.append(state)
    return diffed, states


def _yule_walker_start(diffed: TimeSeries, spec: ArimaSpec) -> np.ndarray:
    """AR parts from the sample ACF, MA parts zero. Falls back to zeros."""
    start = np.zeros(spec.n_coefficients)
    max_lag = max(spec.p, spec.P * spec.m)
    if max_lag == 0 or max_lag >= len(diffed):
        return start
    try:
        rho = np.asarray(acf(diffed, max_lag).values)
        phi = solve_toeplitz(rho[: spec.p], rho[1: spec.p + 1]) if spec.p else np.zeros(0)
        seasonal = rho[0: spec.P * spec.m + 1: spec.m] if spec.P else np.zeros(1)
        Phi = solve_toeplitz(seasonal[:-1], seasonal[1:]) if spec.P else np.zeros(0)
    except (DiagnosticError, LinAlgError):
        return start

    candidate = np.concatenate((phi, np.zeros(spec.q), Phi, np.zeros(spec.Q)))
    if not np.all(np.isfinite(candidate)) or not is_admissible(*_split(candidate, spec)):
        return start
    return candidate


def _minimize(x: np.ndarray, spec: ArimaSpec, start: np.ndarray):
    dim = len(start)
    simplex = np.vstack((start, start + SIMPLEX_STEP * np.eye(dim)))
    return minimize(
        _objective,
        start,
        args=(x, spec),
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": SIMPLEX_XATOL,
            # Stop on simplex size alone
            "fatol": math.inf,
            "maxfev": EVALS_PER_DIM * dim,
        },
    )


def _search(x: np.ndarray, spec: ArimaSpec, diffed: TimeSeries) -> Tuple[np.ndarray, bool]:
    """Best coefficient vector over both starts, and whether its simplex converged."""
    starts = [np.zeros(spec.n_coefficients), _yule_walker_start(diffed, spec)]
    usable = []
    for start in starts:
        initial = _objective(start, x, spec)
        result = _minimize(x, spec, start)
        if math.isfinite(result.fun) and (result.success or result.fun < initial):
            usable.append(result)
        else:
            logger.debug("%s: start %s made no progress (%s)", spec.label, start.tolist(), result.message)
    if not usable:
        raise ModelError(f"{spec.label}: optimizer failed to improve over both starts")

    # min() keeps the first on ties, so the zero start wins those
    winner = min(usable, key=lambda r: r.fun)
    if not is_admissible(*_split(winner.x, spec)):
        raise ModelError(f"{spec.label}: optimizer found no stationary, invertible solution")
    if not winner.success:
        logger.warning("%s: simplex stopped after %d evaluations without converging", spec.label, winner.nfev)
    logger.debug("%s: SSE %.6g after %d evaluations", spec.label, winner.fun, winner.nfev)
    return winner.x, bool(winner.success)


def fit(spec: ArimaSpec, series: TimeSeries) -> FittedArima:
    """
    Conditional-sum-of-squares fit with a derivative-free simplex search.
    The recursion runs on the series minus its (estimated) mean; the stored
    intercept is mean * (1 - sum(ar)), the constant of the level equation.
    """
    if len(series) <= spec.min_length:
        raise ModelError(f"{spec.label} needs more than {spec.min_length} observations, got {len(series)}")

    diffed, states = apply_differencing(series, spec)
    x = diffed.array
    n = len(x)

    best, converged = np.zeros(0), True
    if spec.n_coefficients > 0:
        best, converged = _search(x, spec, diffed)

    coefs = _split(best, spec)
    mean, residuals = _centered_residuals(x, coefs, spec)
    ar, _ = expand_polynomials(spec, *coefs)
    intercept = mean * (1.0 - float(ar.sum()))
    sse = float(np.dot(residuals, residuals))
    sigma2 = sse / n
    if not sigma2 > 0.0 or not math.isfinite(sigma2):
        raise ModelError(f"{spec.label}: degenerate residual variance {sigma2}")

    loglik = -n / 2.0 * (math.log(2.0 * math.pi * sigma2) + 1.0)
    aic = -2.0 * loglik + 2.0 * spec.n_params
    phi, theta, Phi, Theta = coefs
    return FittedArima(
        spec=spec,
        phi=phi.tolist(),
        theta=theta.tolist(),
        Phi=Phi.tolist(),
        Theta=Theta.tolist(),
        intercept=intercept,
        mean=mean,
        converged=converged,
        sigma2=sigma2,
        aic=aic,
        loglik=loglik,
        diff_state=states,
        history=series,
        differenced=x.tolist(),
        residuals=residuals.tolist(),
    )


def forecast(fitted: FittedArima, horizon: int) -> ForecastResult:
    """
    Recursive forecasts in differenced space: unknown future values are
    replaced by their forecasts and unknown future errors by zero. The
    result is then integrated through the stored differencing passes.
    """
    if horizon < 1:
        raise ModelError(f"forecast horizon must be >= 1, got {horizon}")

    spec = fitted.spec
    ar, ma = expand_polynomials(spec, fitted.phi, fitted.theta, fitted.Phi, fitted.Theta)
    n = len(fitted.differenced)
    x = np.concatenate((fitted.differenced, np.zeros(horizon)))
    e = np.concatenate((fitted.residuals, np.zeros(horizon)))
    ar_lags = np.arange(1, len(ar) + 1)
    ma_lags = np.arange(1, len(ma) + 1)

    for t in range(n, n + horizon):
        ar_idx, ma_idx = t - ar_lags, t - ma_lags
        ar_ok, ma_ok = ar_idx >= 0, ma_idx >= 0
        x[t] = fitted.intercept + np.dot(ar[ar_ok], x[ar_idx[ar_ok]]) + np.dot(ma[ma_ok], e[ma_idx[ma_ok]])

    future = x[n:]
    history = fitted.history
    restored = history.with_values(future, offset=len(history))
    for state in reversed(fitted.diff_state):
        restored = undifference(restored, state, continuation=True)
    return ForecastResult(horizon=horizon, values=list(restored.values), transformed_values=future.tolist())


def fitted_values(fitted: FittedArima) -> TimeSeries:
    """
    In-sample one-step predictions in the units given to fit. Differencing
    is linear in past observations, so the level prediction is the observed
    level minus the residual. The first d + D*m points have none.
    """
    history = fitted.history
    offset = len(history) - len(fitted.differenced)
    predicted = history.array[offset:] - np.asarray(fitted.residuals)
    return history.with_values(predicted, offset=offset)
