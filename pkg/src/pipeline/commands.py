import logging
import os
from datetime import date
from typing import Optional

import numpy as np
import pandas as pd

from src.core.errors import DiagnosticError
from src.core.logs import announce
from src.diagnostics.correlogram import acf, pacf, suggest_orders
from src.diagnostics.unit_root import adf_test
from src.pipeline.config import RECURRENT_FAMILIES, PipelineConfig
from src.pipeline.families import Candidate, build_candidates, fit_predict
from src.series_core.decomposition import decompose
from src.series_core.ingest_events import aggregate_events, read_event_csv
from src.series_core.models import SplitSpec, TimeSeries
from src.series_core.transforms import difference, train_test_split
from src.shared.files import (
    TIMESTAMP_FORMAT,
    ensure_dir,
    read_series_csv,
    write_json,
    write_partial_csv,
    write_series_csv,
    write_table_csv,
)
from src.validation.grid_search import grid_search
from src.validation.metrics import mse, regression_report
from src.validation.models import CvSpec, Fold, GridSearchResult

logger = logging.getLogger(__name__)


# --- ingest ---
def cmd_ingest(input_path: str, step_months: int, output_path: str, origin: Optional[date] = None) -> TimeSeries:
    events = read_event_csv(input_path)
    ts = aggregate_events(events, step_months, origin)
    ensure_dir(os.path.dirname(output_path) or ".")
    write_series_csv(ts, output_path)
    announce(f"{len(ts)} points, {int(ts.array.sum())} events, {ts.start} .. {ts.end} -> {output_path}")
    return ts


# --- diagnose ---
def cmd_diagnose(
    input_path: str,
    output_dir: str,
    period: Optional[int] = None,
    max_lag: int = 20,
    differenced: bool = False,
) -> dict:
    """ADF, correlograms and (when `period` is given) decomposition CSVs."""
    ts = read_series_csv(input_path)
    if differenced:
        ts, _ = difference(ts, d=1)
    if len(ts) < 3:
        raise DiagnosticError(f"series of length {len(ts)} is too short to diagnose")
    ensure_dir(output_dir)

    adf = adf_test(ts)
    # pacf needs lags below n/2
    lags = min(max_lag, (len(ts) - 1) // 2)
    acf_result, pacf_result = acf(ts, lags), pacf(ts, lags)
    p, q = suggest_orders(acf_result, pacf_result)
    report = {
        "n": len(ts),
        "differenced": differenced,
        "adf": adf.to_document(),
        "acf": {"values": list(acf_result.values), "band": acf_result.band},
        "pacf": {"values": list(pacf_result.values), "band": pacf_result.band},
        "suggested_orders": {"p": p, "q": q},
    }

    if period is not None:
        parts = decompose(ts, period)
        for name in ("trend", "seasonal", "residual"):
            write_partial_csv(getattr(parts, name), os.path.join(output_dir, f"{name}.csv"))
        report["decomposition"] = {"period": period, "files": ["trend.csv", "seasonal.csv", "residual.csv"]}

    write_json(report, os.path.join(output_dir, "diagnostics.json"))
    verdict = " / ".join(adf.conclusion)
    announce(f"ADF statistic {adf.statistic:.4f}, p-value {adf.p_value:.4g}: {verdict}", ok=adf.stationary)
    return report


# --- run / cv ---
def load_series(config: PipelineConfig, input_path: str) -> TimeSeries:
    if config.series.source == "events":
        return aggregate_events(read_event_csv(input_path), config.series.step_months, config.series.origin)
    return read_series_csv(input_path)


def _fold_score(config: PipelineConfig, series: TimeSeries):
    def evaluate(candidate: Candidate, fold: Fold) -> float:
        values = series.array[: fold.test_end]
        prediction = fit_predict(config, candidate, series.with_values(values), fold.train_end)
        predicted = prediction.predicted.loc[fold.test_start: fold.test_end - 1].to_numpy()
        return mse(values[fold.test_start: fold.test_end], predicted)

    return evaluate


def cross_validate(config: PipelineConfig, train: TimeSeries) -> GridSearchResult:
    candidates = build_candidates(config, for_cv=True)
    logger.info("Cross-validating %d candidate(s) over %d split(s)", len(candidates), config.cv.n_splits)
    return grid_search(
        candidates,
        _fold_score(config, train),
        CvSpec(n_splits=config.cv.n_splits, gap=config.cv.gap),
        train,
        n_jobs=config.cv.n_jobs,
    )


def _timestamps(series: TimeSeries, index: pd.Index) -> list:
    return [series.date_at(int(i)).strftime(TIMESTAMP_FORMAT) for i in index]


def cmd_run(config: PipelineConfig, input_path: str, output_dir: str) -> dict:
    """
    Split, optional CV selection on the training split, fit, forecast the
    test horizon and score it in original units.
    """
    series = load_series(config, input_path)
    train, test = train_test_split(series, SplitSpec(test_fraction=config.run.test_fraction))
    ensure_dir(output_dir)

    candidates = build_candidates(config)
    selection = None
    if len(candidates) > 1:
        search = cross_validate(config, train)
        candidate = search.best
        selection = search.to_document()
    else:
        candidate = candidates[0]

    prediction = fit_predict(config, candidate, series, len(train))
    actual = series.array

    fit_index = prediction.fitted.index
    write_table_csv(
        {
            "index": list(fit_index),
            "timestamp": _timestamps(series, fit_index),
            "actual": actual[fit_index].tolist(),
            "fitted": prediction.fitted.tolist(),
        },
        os.path.join(output_dir, "fit.csv"),
    )
    test_index = prediction.predicted.index
    write_table_csv(
        {
            "index": list(test_index),
            "timestamp": _timestamps(series, test_index),
            "actual": test.array.tolist(),
            "predicted": prediction.predicted.tolist(),
        },
        os.path.join(output_dir, "forecast.csv"),
    )

    report = regression_report(test.array, prediction.predicted.to_numpy(), group_size=config.run.group_size)
    metrics = {
        "family": config.model.family.value,
        "model": prediction.label,
        "mode": prediction.mode.value,
        "n_train": len(train),
        "n_test": len(test),
        **report.model_dump(),
        "selection": selection,
    }
    write_json(metrics, os.path.join(output_dir, "metrics.json"))
    write_json(prediction.document, os.path.join(output_dir, "model.json"))
    if config.model.family in RECURRENT_FAMILIES and prediction.loss_history is not None:
        history = prediction.loss_history
        write_table_csv(
            {"epoch": list(range(1, len(history) + 1)), "loss": history},
            os.path.join(output_dir, "loss_history.csv"),
        )

    mape_text = "n/a" if report.mape is None else f"{report.mape:.2f}%"
    announce(f"{prediction.label}: MAPE {mape_text}, RMSE {report.rmse:.4g} over {len(test)} test points -> {output_dir}")
    if not np.isfinite(prediction.predicted.to_numpy()).all():
        announce("forecast contains non-finite values", ok=False)
    return metrics


def cmd_cv(config: PipelineConfig, input_path: str, output_dir: str) -> dict:
    series = load_series(config, input_path)
    train, _ = train_test_split(series, SplitSpec(test_fraction=config.run.test_fraction))
    ensure_dir(output_dir)
    search = cross_validate(config, train)
    document = search.to_document()
    write_json(document, os.path.join(output_dir, "cv_report.json"))
    for failure in search.failures:
        announce(f"excluded {failure.label}: {failure.error}", ok=False)
    announce(f"best of {len(search.scores)}: {document['winner']['label']} -> {output_dir}")
    return document
