from datetime import date

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.optimize import OptimizeResult
from scipy.signal import lfilter

from src.arima import estimation
from src.arima.estimation import ROOT_PENALTY, css_residuals, fit, fitted_values, forecast
from src.arima.models import ArimaSpec, FittedArima
from src.arima.polynomials import expand_polynomials, has_cancelling_roots, is_admissible, roots_outside_unit_circle
from src.arima.selection import arima_grid, auto_arima, select_best
from src.core.errors import ConfigError, DimensionError, ModelError
from src.series_core.models import TimeSeries


def _series(values) -> TimeSeries:
    return TimeSeries.from_array(values, start=date(1950, 1, 1), step_months=1)


def _arma(ar, ma, n, seed, burn=200) -> np.ndarray:
    noise = np.random.default_rng(seed).normal(size=n + burn)
    return lfilter(np.r_[1.0, ma], np.r_[1.0, -np.asarray(ar, dtype=float)], noise)[burn:]


# --- specs and polynomials ---
def test_spec_validation():
    with pytest.raises(ValidationError):
        ArimaSpec(p=1, P=1, m=1)
    with pytest.raises(ValidationError):
        ArimaSpec(with_intercept=False)
    walk = ArimaSpec(d=1, with_intercept=False)
    assert walk.n_params == 1
    assert ArimaSpec(p=2, q=1, P=1, m=12).label == "ARIMA(2,0,1)(1,0,0)[12]"


def test_expand_seasonal_ar():
    spec = ArimaSpec(p=1, P=1, m=12)
    ar, ma = expand_polynomials(spec, [0.5], [], [0.3], [])
    assert len(ar) == 13 and len(ma) == 0
    assert ar[0] == pytest.approx(0.5)
    assert ar[11] == pytest.approx(0.3)
    assert ar[12] == pytest.approx(-0.15)
    assert np.count_nonzero(ar) == 3


def test_expand_seasonal_ma_signs():
    spec = ArimaSpec(q=1, Q=1, m=4)
    _, ma = expand_polynomials(spec, [], [0.4], [], [0.5])
    assert ma.tolist() == pytest.approx([0.4, 0.0, 0.0, 0.5, 0.2])


def test_expand_rejects_wrong_lengths():
    with pytest.raises(DimensionError):
        expand_polynomials(ArimaSpec(p=2), [0.5], [], [], [])


def test_admissibility():
    assert is_admissible([0.5], [0.3], [], [])
    assert not is_admissible([1.2], [], [], [])
    assert not is_admissible([], [-1.5], [], [])
    assert roots_outside_unit_circle(np.array([1.0, 0.0]))
    # Root at 1/0.9995 lies inside the margin around the unit circle
    assert not is_admissible([], [-0.9995], [], [])
    assert roots_outside_unit_circle(np.array([1.0, 0.9995]))


def test_cancelling_factors():
    spec = ArimaSpec(p=1, q=1)
    # (1 - 0.5B) against (1 - 0.45B)
    assert has_cancelling_roots(spec, [0.5], [-0.45], [], [])
    assert not has_cancelling_roots(spec, [0.6], [0.3], [], [])
    assert not has_cancelling_roots(ArimaSpec(p=2), [0.5, 0.2], [], [], [])
    # Complex AR pair 0.5 +/- 0.5i against a matching MA pair
    assert has_cancelling_roots(ArimaSpec(p=2, q=2), [1.0, -0.5], [-1.0, 0.48], [], [])


def test_penalty_survives_zero_sse():
    x = np.zeros(20)
    spec = ArimaSpec(p=1, with_intercept=False)
    assert estimation._objective(np.array([1.5]), x, spec) >= ROOT_PENALTY
    assert estimation._objective(np.array([0.5]), x, spec) == 0.0


# --- residuals and forecasts ---
def test_ma1_residual_recursion():
    spec = ArimaSpec(q=1, with_intercept=False)
    residuals = css_residuals([0.5], _series([1.0, 0.0, 0.0]), spec)
    assert residuals.tolist() == pytest.approx([1.0, -0.5, 0.25])


def test_ar1_forecast_halves():
    spec = ArimaSpec(p=1, with_intercept=False)
    history = _series([1.0, 2.0, 4.0])
    fitted = FittedArima(
        spec=spec,
        phi=[0.5],
        theta=[],
        Phi=[],
        Theta=[],
        sigma2=1.0,
        aic=0.0,
        loglik=0.0,
        history=history,
        differenced=list(history.values),
        residuals=[0.0, 0.0, 0.0],
    )
    result = forecast(fitted, 3)
    assert result.values == pytest.approx([2.0, 1.0, 0.5])
    assert result.transformed_values == pytest.approx([2.0, 1.0, 0.5])


def test_mean_model_is_exact():
    x = np.random.default_rng(0).normal(5.0, 2.0, size=200)
    fitted = fit(ArimaSpec(p=0, q=0), _series(x))
    assert fitted.intercept == pytest.approx(x.mean(), abs=1e-8)
    assert fitted.mean == pytest.approx(x.mean(), abs=1e-8)
    assert fitted.sigma2 == pytest.approx(x.var(), rel=1e-10)
    assert forecast(fitted, 4).values == pytest.approx([x.mean()] * 4)


def test_random_walk_forecasts():
    x = np.array([3.0, 5.0, 4.0, 8.0, 10.0])
    walk = fit(ArimaSpec(d=1, with_intercept=False), _series(x))
    assert forecast(walk, 3).values == pytest.approx([10.0, 10.0, 10.0])

    drift = fit(ArimaSpec(d=1), _series(x))
    step = np.diff(x).mean()
    assert forecast(drift, 2).values == pytest.approx([10.0 + step, 10.0 + 2 * step])


def test_fit_rejects_short_series():
    with pytest.raises(ModelError):
        fit(ArimaSpec(p=3, d=1), _series([1.0, 2.0, 3.0, 4.0]))


def test_fitted_values_are_level_minus_residual():
    x = _arma([0.7], [], 150, seed=3).cumsum()
    fitted = fit(ArimaSpec(p=1, d=1), _series(x))
    in_sample = fitted_values(fitted)
    assert len(in_sample) == len(x) - 1
    assert in_sample.start == date(1950, 2, 1)
    assert np.allclose(in_sample.array, x[1:] - np.asarray(fitted.residuals))


def test_fitted_model_json_roundtrip():
    fitted = fit(ArimaSpec(p=1, d=1), _series(_arma([0.5], [], 80, seed=9).cumsum()))
    restored = FittedArima.model_validate_json(fitted.model_dump_json())
    assert restored == fitted
    assert forecast(restored, 5).values == forecast(fitted, 5).values


# --- estimation accuracy ---
def test_arma11_recovery():
    errors_phi, errors_theta = [], []
    for seed in range(20):
        x = _arma([0.6], [0.3], 2000, seed=seed)
        fitted = fit(ArimaSpec(p=1, q=1), _series(x))
        errors_phi.append(abs(fitted.phi[0] - 0.6))
        errors_theta.append(abs(fitted.theta[0] - 0.3))
    assert np.median(errors_phi) <= 0.05 and max(errors_phi) <= 0.1
    assert np.median(errors_theta) <= 0.05 and max(errors_theta) <= 0.1


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fit_is_translation_covariant(seed):
    x = _arma([0.6], [0.3], 600, seed=seed)
    base = fit(ArimaSpec(p=1, q=1), _series(x))
    shifted = fit(ArimaSpec(p=1, q=1), _series(x + 50.0))

    assert shifted.phi[0] == pytest.approx(base.phi[0], abs=0.02)
    assert shifted.theta[0] == pytest.approx(base.theta[0], abs=0.02)
    assert shifted.sigma2 == pytest.approx(base.sigma2, rel=1e-3)
    assert shifted.mean == pytest.approx(base.mean + 50.0, abs=1e-6)
    assert shifted.intercept == pytest.approx(shifted.mean * (1.0 - shifted.phi[0]))
    moved = np.asarray(forecast(shifted, 6).values) - 50.0
    assert np.allclose(moved, forecast(base, 6).values, atol=0.05)


def test_ar1_estimate_matches_least_squares():
    x = _arma([0.5], [], 2000, seed=6) + 10.0
    fitted = fit(ArimaSpec(p=1), _series(x))
    design = np.column_stack((np.ones(len(x) - 1), x[:-1]))
    slope = np.linalg.lstsq(design, x[1:], rcond=None)[0][1]
    assert fitted.phi[0] == pytest.approx(slope, abs=0.02)
    assert fitted.converged


def test_twice_differenced_forecast_is_linear():
    x = np.cumsum(np.cumsum(_arma([], [], 60, seed=8)))
    fitted = fit(ArimaSpec(d=2, with_intercept=False), _series(x))
    values = np.asarray(forecast(fitted, 6).values)
    slope = x[-1] - x[-2]
    assert values == pytest.approx(x[-1] + slope * np.arange(1, 7))
    assert np.allclose(np.diff(values, 2), 0.0)


def _stalled(fun, x0, args=(), method=None, options=None):
    # A simplex run that never leaves its start
    return OptimizeResult(x=np.asarray(x0, dtype=float), fun=fun(x0, *args), success=False, nfev=1, message="stalled")


def test_fit_fails_when_no_start_improves(monkeypatch):
    monkeypatch.setattr(estimation, "minimize", _stalled)
    with pytest.raises(ModelError, match="failed to improve"):
        fit(ArimaSpec(p=1), _series(_arma([0.5], [], 200, seed=1)))


def test_unconverged_fit_is_flagged(monkeypatch):
    def budget_spent(fun, x0, args=(), method=None, options=None):
        moved = np.full(len(x0), 0.4)
        return OptimizeResult(x=moved, fun=fun(moved, *args), success=False, nfev=2000, message="budget spent")

    monkeypatch.setattr(estimation, "minimize", budget_spent)
    fitted = fit(ArimaSpec(p=1), _series(_arma([0.5], [], 200, seed=1)))
    assert not fitted.converged
    assert fitted.phi == pytest.approx([0.4])


def test_seasonal_ar_recovery():
    seasonal = np.zeros(5)
    seasonal[4] = 0.7
    x = _arma(seasonal[1:], [], 800, seed=12)
    fitted = fit(ArimaSpec(P=1, m=4), _series(x))
    assert fitted.Phi[0] == pytest.approx(0.7, abs=0.1)
    assert len(forecast(fitted, 8).values) == 8


# --- selection ---
def test_grid_without_season_ignores_seasonal_ranges():
    specs = arima_grid(1, 1, max_P=2, max_Q=2, d_range=(0, 1), D_range=(0, 1), m=1, with_intercept=False)
    # (0,0,0) without intercept estimates nothing and is skipped
    assert len(specs) == 7
    assert all(s.P == s.Q == s.D == 0 for s in specs)


def test_grid_size_limit():
    with pytest.raises(ConfigError):
        arima_grid(30, 30, max_P=3, max_Q=3, d_range=(0, 1, 2), m=12)


def test_select_best_fails_when_every_cell_fails():
    with pytest.raises(ModelError):
        select_best([ArimaSpec(p=4), ArimaSpec(q=5)], _series([1.0, 2.0, 3.0]))


def test_auto_arima_finds_ar2():
    picks = [auto_arima(_series(_arma([0.6, -0.3], [], 2000, seed=s)), max_p=2, max_q=2).spec for s in range(20)]
    assert sum(spec.p == 2 for spec in picks) >= 16


def test_auto_arima_prefers_mean_on_white_noise():
    fits = [auto_arima(_series(np.random.default_rng(100 + s).normal(size=300)), max_p=2, max_q=2, n_jobs=2) for s in range(20)]
    picks = [f.spec for f in fits]
    # AIC alone keeps white noise with probability below 0.8 on this grid
    assert sum(spec.p == spec.q == 0 for spec in picks) >= 12
    assert not any(has_cancelling_roots(f.spec, f.phi, f.theta, f.Phi, f.Theta) for f in fits)
