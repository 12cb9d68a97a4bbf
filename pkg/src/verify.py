"""
End-to-end checks of the command-line workflow: ingest -> diagnose -> run / cv.
"""
import json
from datetime import date, timedelta

import numpy as np
import pandas as pd
import pytest

from src.main import main

N_YEARS = 60


@pytest.fixture
def event_csv(tmp_path):
    # Yearly counts drift upward, one row per event
    rng = np.random.default_rng(21)
    # Anchors the first interval at 1930-01-01
    rows = [{"Date": "01/15/1930", "Location": "Somewhere", "Aboard": 12}]
    for k in range(N_YEARS):
        year_start = date(1930 + k, 1, 1)
        for _ in range(int(rng.poisson(20 + k))):
            day = year_start + timedelta(days=int(rng.integers(0, 365)))
            rows.append({"Date": day.strftime("%m/%d/%Y"), "Location": "Somewhere", "Aboard": int(rng.integers(1, 100))})
    path = tmp_path / "events.csv"
    pd.DataFrame(rows).to_csv(path, index=False)
    return path, len(rows)


@pytest.fixture
def series_csv(tmp_path, event_csv):
    path = tmp_path / "series.csv"
    assert main(["ingest", "--input", str(event_csv[0]), "--output", str(path), "--step-months", "12"]) == 0
    return path


def _config(tmp_path, text: str) -> str:
    path = tmp_path / "pipeline.ini"
    path.write_text(text)
    return str(path)


def _run(tmp_path, series_csv, text: str, name: str = "out", seed: str = None) -> tuple:
    out = tmp_path / name
    argv = ["run", "--config", _config(tmp_path, text), "--input", str(series_csv), "--output-dir", str(out)]
    if seed is not None:
        argv += ["--seed", seed]
    return main(argv), out


# --- ingest ---
def test_ingest_counts_every_event(tmp_path, event_csv):
    path, n_rows = event_csv
    yearly, half = tmp_path / "yearly.csv", tmp_path / "half.csv"
    assert main(["ingest", "--input", str(path), "--output", str(yearly), "--step-months", "12"]) == 0
    assert main(["ingest", "--input", str(path), "--output", str(half), "--step-months", "6"]) == 0

    yearly_df, half_df = pd.read_csv(yearly), pd.read_csv(half)
    assert list(yearly_df.columns) == ["timestamp", "value"]
    assert yearly_df["value"].sum() == n_rows
    assert half_df["value"].sum() == n_rows
    assert abs(len(half_df) - 2 * len(yearly_df)) <= 1


def test_ingest_without_date_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("When,Location\n01/02/1950,Here\n")
    assert main(["ingest", "--input", str(path), "--output", str(tmp_path / "s.csv")]) == 2


# --- diagnose ---
def test_diagnose_writes_report_and_components(tmp_path, series_csv):
    out = tmp_path / "diag"
    assert main(["diagnose", "--input", str(series_csv), "--output-dir", str(out), "--period", "4"]) == 0
    report = json.loads((out / "diagnostics.json").read_text())
    assert set(report["adf"]) == {"statistic", "pvalue", "lags", "nobs", "critical_values", "conclusion"}
    assert report["acf"]["values"][0] == 1.0
    assert {"p", "q"} == set(report["suggested_orders"])
    trend = pd.read_csv(out / "trend.csv")
    assert len(trend) == N_YEARS
    assert trend["value"].isna().sum() == 4


def test_diagnose_differenced_series_is_stationary(tmp_path, series_csv):
    out = tmp_path / "diag_diff"
    assert main(["diagnose", "--input", str(series_csv), "--output-dir", str(out), "--difference"]) == 0
    report = json.loads((out / "diagnostics.json").read_text())
    assert report["differenced"]
    assert report["n"] == N_YEARS - 1
    assert report["adf"]["conclusion"] == ["Reject the null hypothesis", "Data is stationary"]


def test_diagnose_constant_series(tmp_path):
    path = tmp_path / "flat.csv"
    lines = ["timestamp,value"] + [f"{1950 + k}-01-01,3" for k in range(30)]
    path.write_text("\n".join(lines) + "\n")
    assert main(["diagnose", "--input", str(path), "--output-dir", str(tmp_path / "d")]) == 3


# --- run ---
def test_run_arima_writes_all_outputs(tmp_path, series_csv):
    code, out = _run(tmp_path, series_csv, "[model]\nfamily = arima\np = 1\nd = 1\n[run]\ntest_fraction = 0.2\n")
    assert code == 0
    fit = pd.read_csv(out / "fit.csv")
    forecast = pd.read_csv(out / "forecast.csv")
    metrics = json.loads((out / "metrics.json").read_text())

    assert list(forecast.columns) == ["index", "timestamp", "actual", "predicted"]
    assert list(fit.columns) == ["index", "timestamp", "actual", "fitted"]
    assert len(forecast) == N_YEARS - 48
    assert forecast["index"].iloc[0] == 48
    # Timestamps continue the yearly grid right after the training split
    assert forecast["timestamp"].iloc[0] == "1978-01-01"
    assert metrics["mode"] == "recursive"
    assert metrics["model"] == "ARIMA(1,1,0)"
    assert metrics["mape"] is not None and metrics["rmse"] > 0.0
    assert (out / "model.json").exists()


def test_run_auto_arima(tmp_path, series_csv):
    code, out = _run(tmp_path, series_csv, "[model]\nfamily = auto_arima\nmax_p = 2\nmax_q = 1\nd_range = 0, 1\n")
    assert code == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["model"].startswith("ARIMA(")
    assert metrics["selection"] is None


def test_run_kernel_grid_with_arcsin_chain(tmp_path, series_csv):
    text = """
[transforms]
chain = arcsin_minmax

[model]
family = krr
kernel = rbf
gamma = 0.1, 1
lambda = 0.1
window = 3

[cv]
n_splits = 2

[run]
group_size = 3
"""
    code, out = _run(tmp_path, series_csv, text)
    assert code == 0
    metrics = json.loads((out / "metrics.json").read_text())
    forecast = pd.read_csv(out / "forecast.csv")
    assert metrics["mode"] == "one_step"
    assert metrics["group_size"] == 3
    assert len(metrics["selection"]["candidates"]) == 2
    # Metrics are in event counts, not arcsin units
    assert forecast["predicted"].mean() > 10.0
    rmse = np.sqrt(np.mean((forecast["actual"] - forecast["predicted"]) ** 2))
    assert metrics["rmse"] == pytest.approx(rmse)


def test_run_rnn_is_reproducible(tmp_path, series_csv):
    text = "[transforms]\nchain = log\n[model]\nfamily = lstm\nwindow = 4\nhidden_size = 4\nepochs = 5\nbatch_size = 8\n"
    first_code, first = _run(tmp_path, series_csv, text, name="first", seed="3")
    second_code, second = _run(tmp_path, series_csv, text, name="second", seed="3")
    assert first_code == second_code == 0
    assert (first / "forecast.csv").read_bytes() == (second / "forecast.csv").read_bytes()
    losses = pd.read_csv(first / "loss_history.csv")
    assert list(losses.columns) == ["epoch", "loss"]
    assert len(losses) == 5


@pytest.mark.parametrize(
    "model",
    [
        "family = arima\np = 1\nq = 1\n",
        "family = krr\nkernel = rbf\ngamma = 0.1\nlambda = 0.1\nwindow = 3\n",
        "family = svr\nkernel = rbf\ngamma = 0.1\nC = 10\nepsilon = 0.1\nwindow = 3\n",
    ],
)
def test_run_outputs_are_byte_identical(tmp_path, series_csv, model):
    text = f"[model]\n{model}[run]\nseed = 4\n"
    first_code, first = _run(tmp_path, series_csv, text, name="first")
    second_code, second = _run(tmp_path, series_csv, text, name="second")
    assert first_code == second_code == 0
    for name in ("fit.csv", "forecast.csv", "metrics.json", "model.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_run_from_events(tmp_path, event_csv):
    text = "[series]\nsource = events\nstep_months = 12\n[model]\nfamily = svr\nkernel = linear\nC = 1\nepsilon = 0.1\nwindow = 3\n"
    out = tmp_path / "events_run"
    argv = ["run", "--config", _config(tmp_path, text), "--input", str(event_csv[0]), "--output-dir", str(out)]
    assert main(argv) == 0
    assert len(pd.read_csv(out / "forecast.csv")) == N_YEARS - 48


def test_run_rejects_bad_config(tmp_path, series_csv):
    code, _ = _run(tmp_path, series_csv, "[model]\nfamily = arima\n[transforms]\nchain = difference\n")
    assert code == 5


# --- cv ---
def test_cv_reports_folds_and_winner(tmp_path, series_csv):
    text = "[model]\nfamily = arima\np = 0, 1\nd = 1\n[cv]\nn_splits = 3\ngap = 1\n"
    out = tmp_path / "cv"
    argv = ["cv", "--config", _config(tmp_path, text), "--input", str(series_csv), "--output-dir", str(out)]
    assert main(argv) == 0
    report = json.loads((out / "cv_report.json").read_text())
    assert len(report["candidates"]) == 2
    assert report["winner"]["label"] in {"ARIMA(0,1,0)", "ARIMA(1,1,0)"}
    assert all(len(c["fold_scores"]) == len(report["folds"]) for c in report["candidates"])
