import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

from pydantic import ValidationError

from src.arima.estimation import fit
from src.arima.models import ArimaSpec, FittedArima
from src.arima.polynomials import has_cancelling_roots
from src.core.errors import ConfigError, ModelError, ToolkitError
from src.series_core.models import TimeSeries

logger = logging.getLogger(__name__)

MAX_GRID_CELLS = 10_000


def arima_grid(
    max_p: int,
    max_q: int,
    max_P: int = 0,
    max_Q: int = 0,
    d_range: Sequence[int] = (0,),
    D_range: Sequence[int] = (0,),
    m: int = 1,
    with_intercept: bool = True,
) -> List[ArimaSpec]:
    """Every valid order combination, in (p, q, P, Q, d, D) order."""
    if not d_range or not D_range or min(max_p, max_q, max_P, max_Q) < 0:
        raise ConfigError("ARIMA search ranges must be non-empty and non-negative")
    seasonal = m >= 2
    P_values = range(max_P + 1) if seasonal else [0]
    Q_values = range(max_Q + 1) if seasonal else [0]
    D_values = sorted(set(D_range)) if seasonal else [0]

    specs = []
    for p, q, P, Q, d, D in itertools.product(range(max_p + 1), range(max_q + 1), P_values, Q_values, sorted(set(d_range)), D_values):
        try:
            specs.append(ArimaSpec(p=p, d=d, q=q, P=P, D=D, Q=Q, m=m, with_intercept=with_intercept))
        except ValidationError:
            continue
    if len(specs) > MAX_GRID_CELLS:
        raise ConfigError(f"ARIMA grid has {len(specs)} cells, limit is {MAX_GRID_CELLS}")
    if not specs:
        raise ConfigError("ARIMA grid is empty")
    return specs


def _try_fit(spec: ArimaSpec, series: TimeSeries) -> Optional[FittedArima]:
    try:
        fitted = fit(spec, series)
    except (ToolkitError, ValueError, ArithmeticError) as e:
        logger.warning("Skipping %s: %s", spec.label, e)
        return None
    # The lower-order model without the cancelling pair is in the grid too
    if has_cancelling_roots(spec, fitted.phi, fitted.theta, fitted.Phi, fitted.Theta):
        logger.info("Skipping %s: AR and MA factors cancel", spec.label)
        return None
    return fitted


def select_best(specs: Sequence[ArimaSpec], series: TimeSeries, n_jobs: int = 1) -> FittedArima:
    """Minimum AIC; ties go to the lexicographically smallest (p, q, P, Q, d, D)."""
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            fits = list(pool.map(lambda s: _try_fit(s, series), specs))
    else:
        fits = [_try_fit(spec, series) for spec in specs]

    accepted = [f for f in fits if f is not None]
    if not accepted:
        raise ModelError(f"all {len(specs)} ARIMA candidates failed to fit")
    best = min(accepted, key=lambda f: (f.aic, f.spec.sort_key))
    logger.info("Selected %s (AIC %.3f) out of %d fitted candidates", best.spec.label, best.aic, len(accepted))
    return best


def auto_arima(
    series: TimeSeries,
    max_p: int,
    max_q: int,
    max_P: int = 0,
    max_Q: int = 0,
    d_range: Sequence[int] = (0,),
    D_range: Sequence[int] = (0,),
    m: int = 1,
    with_intercept: bool = True,
    n_jobs: int = 1,
) -> FittedArima:
    specs = arima_grid(max_p, max_q, max_P, max_Q, d_range, D_range, m, with_intercept)
    return select_best(specs, series, n_jobs=n_jobs)
