from datetime import date

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.errors import ConfigError, DimensionError, MetricError, ModelError
from src.series_core.models import TimeSeries
from src.validation.grid_search import grid_search
from src.validation.metrics import grouped_mape, mae, mape, mse, regression_report, rmse
from src.validation.models import CvSpec, Fold
from src.validation.splits import expanding_splits


def _series(n: int) -> TimeSeries:
    return TimeSeries.from_array(np.arange(float(n)), start=date(1990, 1, 1), step_months=12)


# --- metrics ---
def test_mape_examples():
    assert mape([100.0, 200.0], [110.0, 180.0]).value == pytest.approx(10.0)
    result = mape([0.0, 100.0], [5.0, 90.0])
    assert result.value == pytest.approx(10.0)
    assert result.excluded == 1
    with pytest.raises(MetricError):
        mape([0.0, 0.0], [1.0, 2.0])


def test_grouped_mape_cancels_within_groups():
    assert grouped_mape([100.0, 100.0], [90.0, 110.0], group_size=2).value == pytest.approx(0.0)
    # Groups (1, 2) and (3,): means 1.5 vs 2.0 and 3 vs 3
    result = grouped_mape([1.0, 2.0, 3.0], [2.0, 2.0, 3.0], group_size=2)
    assert result.value == pytest.approx(100.0 * (0.5 / 1.5) / 2.0)


def test_grouped_mape_with_singleton_groups_is_mape():
    rng = np.random.default_rng(21)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        y = rng.uniform(1.0, 100.0, size=n) * rng.choice([-1.0, 1.0], size=n)
        y_hat = y + rng.normal(scale=5.0, size=n)
        assert grouped_mape(y, y_hat, group_size=1).value == pytest.approx(mape(y, y_hat).value, rel=1e-12)


def test_squared_and_absolute_errors():
    y, y_hat = [1.0, 2.0, 3.0], [1.0, 4.0, 0.0]
    assert mse(y, y_hat) == pytest.approx(13.0 / 3.0)
    assert rmse(y, y_hat) == pytest.approx(np.sqrt(13.0 / 3.0))
    assert mae(y, y_hat) == pytest.approx(5.0 / 3.0)
    with pytest.raises(DimensionError):
        mse([1.0], [1.0, 2.0])


def test_report_keeps_going_without_mape():
    report = regression_report([0.0, 0.0, 0.0], [1.0, -1.0, 0.0], group_size=2)
    assert report.mape is None and report.grouped_mape is None
    assert report.mse == pytest.approx(2.0 / 3.0)

    full = regression_report([10.0, 20.0, 30.0, 40.0], [11.0, 19.0, 33.0, 37.0], group_size=2)
    assert full.mape == pytest.approx(100.0 * (0.1 + 0.05 + 0.1 + 0.075) / 4.0)
    assert full.grouped_mape == pytest.approx(0.0)


# --- splits ---
def test_expanding_splits_without_gap():
    folds = expanding_splits(12, CvSpec(n_splits=3))
    assert [(f.train_end, f.test_start, f.test_end) for f in folds] == [(3, 3, 6), (6, 6, 9), (9, 9, 12)]
    assert all(f.test_size == 3 for f in folds)


def test_fold_running_past_the_end_is_dropped():
    folds = expanding_splits(8, CvSpec(n_splits=3, gap=1))
    assert [(f.train_end, f.test_start, f.test_end) for f in folds] == [(2, 3, 5), (4, 5, 7)]


def test_expanding_splits_exact_small_case():
    folds = expanding_splits(8, CvSpec(n_splits=3, gap=0))
    assert [(f.train_end, f.test_start, f.test_end) for f in folds] == [(2, 2, 4), (4, 4, 6), (6, 6, 8)]


def test_random_splits_never_leak_and_keep_growing():
    rng = np.random.default_rng(8)
    checked = 0
    for _ in range(1000):
        n = int(rng.integers(2, 200))
        spec = CvSpec(n_splits=int(rng.integers(1, 10)), gap=int(rng.integers(0, 20)))
        try:
            folds = expanding_splits(n, spec)
        except ConfigError:
            continue
        checked += 1
        size = n // (spec.n_splits + 1)
        for fold in folds:
            assert fold.train_end == fold.index * size
            assert fold.train_end - 1 + spec.gap < fold.test_start
            assert fold.test_end <= n and fold.test_size == size
        # Each training set contains the previous one
        ends = [fold.train_end for fold in folds]
        assert ends == sorted(set(ends))
    assert checked > 500


def test_infeasible_splits():
    with pytest.raises(ConfigError):
        expanding_splits(3, CvSpec(n_splits=3))
    with pytest.raises(ConfigError):
        expanding_splits(10, CvSpec(n_splits=4, gap=7))


def test_fold_never_leaks():
    with pytest.raises(ValidationError):
        Fold(index=1, train_end=5, test_start=4, test_end=8)
    train, test = Fold(index=1, train_end=4, test_start=5, test_end=7).slice(_series(10))
    assert train.values == (0.0, 1.0, 2.0, 3.0)
    assert test.values == (5.0, 6.0)
    assert test.start == date(1995, 1, 1)


# --- grid search ---
def test_grid_search_picks_lowest_mean():
    result = grid_search([1.0, 2.0, 3.0], lambda c, fold: abs(c - 2.0) + fold.index, CvSpec(n_splits=2), _series(9))
    assert result.best == 2.0
    assert result.best_index == 1
    assert result.scores[1].fold_scores == [1.0, 2.0]
    assert result.scores[1].mean == pytest.approx(1.5)


def test_grid_search_ties_go_to_first():
    result = grid_search(["a", "b"], lambda c, fold: 1.0, CvSpec(n_splits=2), _series(9))
    assert result.best == "a"


def test_grid_search_excludes_failing_candidates():
    def evaluate(candidate, fold):
        if candidate == "broken" and fold.index == 2:
            raise ModelError("singular system")
        if candidate == "nan":
            return float("nan")
        return {"broken": 0.0, "nan": 0.0, "ok": 5.0}[candidate]

    result = grid_search(["broken", "nan", "ok"], evaluate, CvSpec(n_splits=2), _series(9), n_jobs=2)
    assert result.best == "ok"
    assert [s.label for s in result.failures] == ["broken", "nan"]
    assert "singular" in result.failures[0].error

    document = result.to_document()
    assert document["winner"] == {"index": 2, "label": "ok"}
    assert len(document["folds"]) == 2


def test_grid_search_all_failing():
    def evaluate(candidate, fold):
        raise ValueError("nope")

    with pytest.raises(ModelError):
        grid_search(["x", "y"], evaluate, CvSpec(n_splits=2), _series(9))
