import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.stats import norm

from src.core.errors import DiagnosticError
from src.diagnostics.models import AdfResult
from src.series_core.models import TimeSeries

logger = logging.getLogger(__name__)

MIN_ADF_LENGTH = 12

# MacKinnon (1994) response surface, constant-only regression, one variable.
# Coefficients are ascending powers of the statistic.
TAU_STAR = -1.61
TAU_MIN = -18.83
TAU_MAX = 2.74
TAU_SMALLP = (2.1659, 1.4412, 3.8269e-2)
TAU_LARGEP = (1.7339, 0.93202, -0.12745, -0.010368)

# MacKinnon (2010) finite-sample critical values: b0 + b1/T + b2/T^2 + b3/T^3
TAU_CRITICAL = {
    "1%": (-3.43035, -6.5393, -16.786, -79.433),
    "5%": (-2.86154, -2.8903, -4.234, -40.040),
    "10%": (-2.56677, -1.5384, -2.809, 0.0),
}


def mackinnon_p_value(statistic: float) -> float:
    """Approximate asymptotic p-value of the ADF statistic."""
    if statistic > TAU_MAX:
        return 1.0
    if statistic < TAU_MIN:
        return 0.0
    coefs = TAU_SMALLP if statistic <= TAU_STAR else TAU_LARGEP
    return float(norm.cdf(np.polynomial.polynomial.polyval(statistic, coefs)))


def mackinnon_critical_values(n_obs: int) -> Dict[str, float]:
    t = float(n_obs)
    return {level: b[0] + b[1] / t + b[2] / t**2 + b[3] / t**3 for level, b in TAU_CRITICAL.items()}


def default_max_lag(n: int) -> int:
    # Schwert's rule, capped so the regression keeps enough rows
    return max(0, min(int(math.floor(12.0 * (n / 100.0) ** 0.25)), n // 2 - 2))


def _design(x: np.ndarray, dx: np.ndarray, lag: int, start: int) -> Tuple[np.ndarray, np.ndarray]:
    rows = np.arange(start, len(dx))
    columns = [np.ones(len(rows)), x[rows]]
    columns += [dx[rows - j] for j in range(1, lag + 1)]
    return np.column_stack(columns), dx[rows]


def _ols(X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    n, k = X.shape
    if n <= k or np.linalg.matrix_rank(X) < k:
        raise DiagnosticError("ADF regression matrix is singular")
    try:
        xtx_inv = np.linalg.inv(X.T @ X)
    except np.linalg.LinAlgError as e:
        raise DiagnosticError("ADF regression matrix is singular") from e
    beta = xtx_inv @ X.T @ y
    ssr = float(np.sum((y - X @ beta) ** 2))
    return beta, xtx_inv, ssr


def _aic(ssr: float, n: int, k: int) -> float:
    if ssr <= 0.0:
        return -math.inf
    loglik = -n / 2.0 * (math.log(2.0 * math.pi * ssr / n) + 1.0)
    return -2.0 * loglik + 2.0 * k


def adf_test(ts: TimeSeries, max_lag: Optional[int] = None) -> AdfResult:
    """
    Regresses the first difference on a constant, the lagged level and
    `lag` lagged differences. The lag is picked by AIC over a common
    sample, then the regression is re-run on all usable rows.
    """
    x = ts.array
    n = len(x)
    if n < MIN_ADF_LENGTH:
        raise DiagnosticError(f"ADF needs at least {MIN_ADF_LENGTH} observations, got {n}")
    if np.ptp(x) == 0.0:
        raise DiagnosticError("ADF is undefined for a constant series")

    cap = default_max_lag(n)
    max_lag = cap if max_lag is None else min(max(0, max_lag), cap)
    dx = np.diff(x)

    best_lag, best_aic = 0, math.inf
    for lag in range(max_lag + 1):
        X, y = _design(x, dx, lag, start=max_lag)
        _, _, ssr = _ols(X, y)
        aic = _aic(ssr, len(y), X.shape[1])
        if aic < best_aic:
            best_lag, best_aic = lag, aic

    X, y = _design(x, dx, best_lag, start=best_lag)
    beta, xtx_inv, ssr = _ols(X, y)
    n_obs, k = X.shape
    sigma2 = ssr / (n_obs - k)
    std_err = math.sqrt(sigma2 * xtx_inv[1, 1])
    if std_err == 0.0:
        raise DiagnosticError("ADF regression has zero residual variance")
    statistic = float(beta[1] / std_err)

    critical = mackinnon_critical_values(n_obs)
    logger.debug("ADF lag=%d n_obs=%d stat=%.4f", best_lag, n_obs, statistic)
    return AdfResult(
        statistic=statistic,
        p_value=mackinnon_p_value(statistic),
        lags_used=best_lag,
        n_obs=n_obs,
        critical_values=critical,
        stationary=statistic < critical["5%"],
    )
