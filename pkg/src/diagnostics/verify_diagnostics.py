from datetime import date

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.linalg import toeplitz
from scipy.signal import lfilter

from src.core.errors import DiagnosticError
from src.diagnostics.correlogram import acf, pacf, suggest_orders
from src.diagnostics.models import AdfResult, CorrelogramResult
from src.diagnostics.unit_root import adf_test, default_max_lag, mackinnon_critical_values, mackinnon_p_value
from src.series_core.models import TimeSeries


def _series(values) -> TimeSeries:
    return TimeSeries.from_array(values, start=date(1920, 1, 1), step_months=12)


def _ar1(phi: float, n: int, seed: int) -> np.ndarray:
    noise = np.random.default_rng(seed).normal(size=n + 200)
    return lfilter([1.0], [1.0, -phi], noise)[200:]


# --- ADF ---
def test_critical_values_for_96_observations():
    cv = mackinnon_critical_values(96)
    assert cv["1%"] == pytest.approx(-3.500379, abs=1e-3)
    assert cv["5%"] == pytest.approx(-2.892152, abs=1e-3)
    assert cv["10%"] == pytest.approx(-2.583100, abs=1e-3)


def test_p_value_reference_point():
    assert mackinnon_p_value(-1.807) == pytest.approx(0.377, abs=0.01)


def test_p_value_is_monotone_and_bounded():
    grid = np.linspace(-25.0, 5.0, 301)
    p = np.array([mackinnon_p_value(s) for s in grid])
    assert np.all(np.diff(p) >= -1e-12)
    assert p[0] == 0.0 and p[-1] == 1.0


def test_default_max_lag():
    assert default_max_lag(100) == 12
    # Capped at n//2 - 2 for short series
    assert default_max_lag(12) == 4


def test_random_walk_is_rarely_stationary():
    verdicts = [adf_test(_series(np.random.default_rng(s).normal(size=200).cumsum())).stationary for s in range(20)]
    assert sum(verdicts) <= 4


def test_white_noise_is_stationary():
    for seed in range(10):
        result = adf_test(_series(np.random.default_rng(seed).normal(size=200)))
        assert result.stationary
        assert result.p_value < 0.01
        assert result.conclusion == ("Reject the null hypothesis", "Data is stationary")


def test_differenced_random_walk_is_strongly_stationary():
    walk = np.random.default_rng(7).normal(size=300).cumsum()
    result = adf_test(_series(np.diff(walk)), max_lag=0)
    assert result.statistic <= -9.0
    assert result.p_value < 1e-10


def test_adf_document_fields():
    result = adf_test(_series(np.random.default_rng(1).normal(size=100)))
    document = result.to_document()
    assert set(document) == {"statistic", "pvalue", "lags", "nobs", "critical_values", "conclusion"}
    assert document["nobs"] == result.n_obs == 99 - result.lags_used


def test_adf_rejects_constant_and_short_series():
    with pytest.raises(DiagnosticError, match="constant"):
        adf_test(_series(np.full(30, 4.0)))
    with pytest.raises(DiagnosticError):
        adf_test(_series(np.arange(8.0)))


@pytest.mark.parametrize("shift", [-30.0, 1000.0])
def test_adf_is_translation_invariant(shift):
    x = _ar1(0.5, 300, seed=5)
    base = adf_test(_series(x))
    moved = adf_test(_series(x + shift))
    assert moved.lags_used == base.lags_used
    assert moved.statistic == pytest.approx(base.statistic, rel=1e-6)
    assert moved.stationary == base.stationary


def test_adf_result_flag_must_match_critical_value():
    with pytest.raises(ValidationError):
        AdfResult(
            statistic=-1.0,
            p_value=0.7,
            lags_used=0,
            n_obs=50,
            critical_values={"1%": -3.5, "5%": -2.9, "10%": -2.6},
            stationary=True,
        )


# --- correlograms ---
def test_acf_of_ar1():
    result = acf(_series(_ar1(0.5, 10_000, seed=0)), max_lag=10)
    assert result.values[0] == 1.0
    assert result.values[1] == pytest.approx(0.5, abs=0.03)
    assert result.band == pytest.approx(1.96 / 100.0)


def test_pacf_of_ar1_cuts_off():
    result = pacf(_series(_ar1(0.5, 10_000, seed=0)), max_lag=10)
    assert result.values[1] == pytest.approx(0.5, abs=0.03)
    outside = [k for k in range(2, 11) if abs(result.values[k]) > result.band]
    assert len(outside) <= 1


def test_pacf_matches_dense_yule_walker_solve():
    x = _ar1(0.6, 500, seed=4)
    max_lag = 8
    result = pacf(_series(x), max_lag)

    centered = x - x.mean()
    rho = np.array([np.dot(centered[: len(x) - k], centered[k:]) for k in range(max_lag + 1)]) / np.dot(centered, centered)
    for k in range(1, max_lag + 1):
        coefs = np.linalg.solve(toeplitz(rho[:k]), rho[1: k + 1])
        assert result.values[k] == pytest.approx(coefs[-1], abs=1e-6)


def test_correlogram_lag_limits():
    ts = _series(np.random.default_rng(2).normal(size=20))
    with pytest.raises(DiagnosticError):
        acf(ts, max_lag=20)
    with pytest.raises(DiagnosticError):
        pacf(ts, max_lag=10)
    with pytest.raises(DiagnosticError):
        acf(_series(np.ones(20)), max_lag=3)


def test_suggest_orders_reads_last_significant_lag():
    band = 0.1
    acf_result = CorrelogramResult(values=[1.0, 0.5, 0.05, -0.3, 0.02], band=band)
    pacf_result = CorrelogramResult(values=[1.0, 0.6, 0.2, 0.0, 0.01], band=band)
    assert suggest_orders(acf_result, pacf_result) == (2, 3)

    quiet = CorrelogramResult(values=[1.0, 0.01, -0.02], band=band)
    assert suggest_orders(quiet, quiet) == (0, 0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_suggest_orders_ignores_scale(seed):
    x = _ar1(0.7, 400, seed=seed)
    orders = suggest_orders(acf(_series(x), 12), pacf(_series(x), 12))
    scaled = suggest_orders(acf(_series(10.0 * x), 12), pacf(_series(10.0 * x), 12))
    assert scaled == orders
