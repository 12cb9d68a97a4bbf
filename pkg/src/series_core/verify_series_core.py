from datetime import date

import numpy as np
import pytest

from src.core.errors import ConfigError, DiagnosticError, InputFormatError, TransformError
from src.series_core.decomposition import decompose
from src.series_core.ingest_events import aggregate_events, read_event_csv
from src.series_core.models import EventLog, SplitSpec, TimeSeries, TransformKind
from src.series_core.transforms import (
    apply_with_state,
    arcsin_transform,
    difference,
    ewma,
    exp_restore,
    log_transform,
    moving_average,
    sin_restore,
    train_test_split,
    undifference,
)
from src.shared.files import read_series_csv, write_series_csv

START = date(2000, 1, 1)


def _series(values, step_months=1) -> TimeSeries:
    return TimeSeries.from_array(values, start=START, step_months=step_months)


def _write_events(path, dates, header="Date,Location,Fatalities"):
    lines = [header] + [f"{d.strftime('%m/%d/%Y')},Somewhere,1" for d in dates]
    path.write_text("\n".join(lines) + "\n")


# --- ingestion ---
def test_aggregate_counts_per_interval():
    events = EventLog(timestamps=(date(2000, 1, 5), date(2000, 1, 20), date(2000, 3, 1)))
    ts = aggregate_events(events, step_months=1)
    assert ts.values == (2.0, 0.0, 1.0)
    assert ts.start == START
    assert ts.end == date(2000, 3, 1)


def test_aggregate_respects_origin_and_step():
    events = EventLog(timestamps=(date(2001, 2, 1), date(2001, 7, 1), date(2002, 1, 1)))
    ts = aggregate_events(events, step_months=6, origin=date(2001, 1, 1))
    assert ts.values == (1.0, 1.0, 1.0)
    assert ts.timestamps() == [date(2001, 1, 1), date(2001, 7, 1), date(2002, 1, 1)]


def test_aggregate_rejects_late_origin():
    events = EventLog(timestamps=(date(2000, 1, 5),))
    with pytest.raises(InputFormatError):
        aggregate_events(events, step_months=1, origin=date(2000, 2, 1))


def test_event_csv_roundtrip_sum_equals_rows(tmp_path):
    rng = np.random.default_rng(3)
    days = rng.integers(0, 20 * 365, size=250)
    dates = [date.fromordinal(date(1950, 1, 1).toordinal() + int(k)) for k in days]
    csv = tmp_path / "events.csv"
    _write_events(csv, dates)

    events = read_event_csv(str(csv))
    yearly = aggregate_events(events, step_months=12)
    half_yearly = aggregate_events(events, step_months=6)

    assert yearly.array.sum() == 250
    assert half_yearly.array.sum() == 250
    assert abs(len(half_yearly) - 2 * len(yearly)) <= 1


def test_event_csv_missing_date_column(tmp_path):
    csv = tmp_path / "events.csv"
    csv.write_text("When,Location\n01/02/2000,Here\n")
    with pytest.raises(InputFormatError):
        read_event_csv(str(csv))


def test_event_csv_bad_date(tmp_path):
    csv = tmp_path / "events.csv"
    csv.write_text("Date\n01/02/2000\n2000-13-45\n")
    with pytest.raises(InputFormatError):
        read_event_csv(str(csv))


def test_series_csv_roundtrip(tmp_path):
    ts = _series([1.0, 2.5, 0.0, 4.0], step_months=3)
    path = tmp_path / "series.csv"
    write_series_csv(ts, str(path))
    assert read_series_csv(str(path)) == ts


def test_series_csv_irregular_grid(tmp_path):
    path = tmp_path / "series.csv"
    path.write_text("timestamp,value\n2000-01-01,1\n2000-02-01,2\n2000-04-01,3\n")
    with pytest.raises(InputFormatError):
        read_series_csv(str(path))


# --- split ---
def test_split_is_chronological():
    ts = _series(np.arange(10.0))
    train, test = train_test_split(ts, SplitSpec(test_fraction=0.3))
    assert len(train) == 7 and len(test) == 3
    assert test.start == ts.date_at(7)
    assert np.array_equal(np.concatenate([train.array, test.array]), ts.array)


def test_split_too_small():
    with pytest.raises(ConfigError):
        train_test_split(_series([1.0, 2.0]), SplitSpec(test_fraction=0.5))


# --- differencing ---
def test_difference_examples():
    diffed, state = difference(_series([1.0, 3.0, 6.0, 10.0]))
    assert diffed.values == (2.0, 3.0, 4.0)
    assert diffed.start == date(2000, 2, 1)
    assert undifference(diffed, state) == _series([1.0, 3.0, 6.0, 10.0])

    diffed, _ = difference(_series([1.0, 3.0, 6.0, 10.0]), d=2)
    assert diffed.values == (1.0, 1.0)


def test_seasonal_difference_roundtrip():
    values = np.array([5.0, 1.0, 7.0, 6.0, 3.0, 9.0, 8.0])
    diffed, state = difference(_series(values), d=1, seasonal_lag=3)
    assert state.lags == (1, 3)
    assert np.allclose(undifference(diffed, state).array, values)


def test_difference_too_short():
    with pytest.raises(TransformError):
        difference(_series([1.0, 2.0]), d=1, seasonal_lag=2)


def test_undifference_continuation_integrates_from_tail():
    _, state = difference(_series([1.0, 2.0, 4.0]))
    future = undifference(_series([1.0, 1.0]), state, continuation=True)
    assert future.values == (5.0, 6.0)


@pytest.mark.parametrize("d,seasonal_lag", [(1, 0), (2, 0), (0, 4), (1, 4)])
def test_difference_roundtrip_random(d, seasonal_lag):
    rng = np.random.default_rng(11)
    for _ in range(50):
        values = rng.normal(size=int(rng.integers(12, 40))).cumsum()
        diffed, state = difference(_series(values), d=d, seasonal_lag=seasonal_lag)
        assert np.allclose(undifference(diffed, state).array, values, atol=1e-10)


# --- pointwise transforms ---
def test_arcsin_roundtrip_and_range():
    rng = np.random.default_rng(5)
    for _ in range(100):
        values = rng.uniform(-50, 50, size=int(rng.integers(2, 30)))
        if values.max() == values.min():
            continue
        transformed, state = arcsin_transform(_series(values), margin=1e-3)
        assert np.all(np.abs(transformed.array) < np.pi / 2)
        assert np.allclose(sin_restore(transformed, state).array, values, atol=1e-10)


def test_arcsin_constant_series():
    with pytest.raises(TransformError):
        arcsin_transform(_series([3.0, 3.0, 3.0]))


def test_arcsin_reapply_clips_out_of_range():
    _, state = arcsin_transform(_series([0.0, 10.0]))
    mapped = apply_with_state(_series([-100.0, 5.0, 100.0]), state)
    assert mapped.array[0] == pytest.approx(-np.pi / 2)
    assert mapped.array[2] == pytest.approx(np.pi / 2)


def test_sin_restore_clamps_overshoot():
    _, state = arcsin_transform(_series([0.0, 10.0]))
    restored = sin_restore(_series([10.0]), state)
    assert restored.array[0] == pytest.approx(sin_restore(_series([np.pi / 2]), state).array[0])


def test_log_roundtrip_and_domain():
    values = np.array([0.0, 1.0, 10.0, 250.0])
    transformed, state = log_transform(_series(values))
    assert transformed.array[0] == 0.0
    assert np.allclose(exp_restore(transformed, state).array, values, atol=1e-10)
    with pytest.raises(TransformError):
        log_transform(_series([0.0, -1.0]))


def test_restore_rejects_wrong_state():
    _, state = log_transform(_series([1.0, 2.0]))
    with pytest.raises(TransformError):
        sin_restore(_series([0.1]), state)


# --- smoothing ---
def test_moving_average():
    smoothed, state = moving_average(_series([1.0, 2.0, 3.0, 4.0]), window=2)
    assert smoothed.values == (1.5, 2.5, 3.5)
    assert smoothed.start == date(2000, 2, 1)
    assert not state.invertible
    with pytest.raises(TransformError):
        moving_average(_series([1.0, 2.0]), window=3)


def test_ewma():
    smoothed, state = ewma(_series([2.0, 4.0, 4.0]), alpha=0.5)
    assert smoothed.values == pytest.approx((2.0, 3.0, 3.5))
    assert state.kind == TransformKind.EWMA
    with pytest.raises(TransformError):
        ewma(_series([1.0]), alpha=0.0)


# --- decomposition ---
def test_decompose_recovers_components():
    period = 4
    seasonal = np.tile([1.0, -1.0, 2.0, -2.0], 6)
    trend = 0.5 * np.arange(24)
    parts = decompose(_series(trend + seasonal), period)

    defined = parts.trend.defined()
    assert not defined[:2].any() and not defined[-2:].any()
    assert np.allclose(np.array(parts.trend.values)[defined].astype(float), trend[defined])
    assert np.allclose(parts.seasonal.values, seasonal)
    residual = np.array([v for v in parts.residual.values if v is not None])
    assert np.allclose(residual, 0.0, atol=1e-12)


def test_decompose_too_short():
    with pytest.raises(DiagnosticError):
        decompose(_series(np.arange(7.0)), period=4)
