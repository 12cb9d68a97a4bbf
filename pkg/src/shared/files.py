import json
import os
from typing import Any, Sequence

import pandas as pd

from src.core.errors import InputFormatError
from src.series_core.models import PartialSeries, TimeSeries

SERIES_COLUMNS = ["timestamp", "value"]
TIMESTAMP_FORMAT = "%Y-%m-%d"


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def read_series_csv(csv_path: str) -> TimeSeries:
    """Reads `timestamp,value`; the step is inferred from the first two timestamps."""
    if not os.path.exists(csv_path):
        raise InputFormatError(f"File {csv_path} not found.")
    try:
        df = pd.read_csv(csv_path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputFormatError(f"Error reading CSV {csv_path}: {e}") from e

    if list(df.columns[:2]) != SERIES_COLUMNS:
        raise InputFormatError(f"{csv_path}: expected header {','.join(SERIES_COLUMNS)}")
    if df.empty:
        raise InputFormatError(f"{csv_path}: no rows")

    stamps = pd.to_datetime(df["timestamp"], format=TIMESTAMP_FORMAT, errors="coerce")
    values = pd.to_numeric(df["value"], errors="coerce")
    if stamps.isna().any() or values.isna().any():
        raise InputFormatError(f"{csv_path}: unparseable timestamp or value rows")

    step = 1
    if len(stamps) > 1:
        step = (stamps.iloc[1].year - stamps.iloc[0].year) * 12 + stamps.iloc[1].month - stamps.iloc[0].month
        if step < 1:
            raise InputFormatError(f"{csv_path}: timestamps must increase by whole months")
    ts = TimeSeries.from_array(values.to_numpy(dtype=float), start=stamps.iloc[0].date(), step_months=step)
    if [pd.Timestamp(t) for t in ts.timestamps()] != list(stamps):
        raise InputFormatError(f"{csv_path}: series is not regularly spaced")
    return ts


def write_series_csv(ts: TimeSeries, csv_path: str) -> None:
    df = pd.DataFrame(
        {
            "timestamp": [t.strftime(TIMESTAMP_FORMAT) for t in ts.timestamps()],
            "value": list(ts.values),
        }
    )
    df.to_csv(csv_path, index=False)


def write_partial_csv(series: PartialSeries, csv_path: str) -> None:
    """Missing slots become empty cells."""
    probe = TimeSeries(start=series.start, step_months=series.step_months, values=tuple(0.0 for _ in series.values))
    df = pd.DataFrame(
        {
            "timestamp": [t.strftime(TIMESTAMP_FORMAT) for t in probe.timestamps()],
            "value": list(series.values),
        }
    )
    df.to_csv(csv_path, index=False)


def write_table_csv(columns: dict[str, Sequence[Any]], csv_path: str) -> None:
    pd.DataFrame(columns).to_csv(csv_path, index=False)


def write_json(document: Any, json_path: str) -> None:
    with open(json_path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2, sort_keys=False, default=str)
        handle.write("\n")
