import logging
import os
from datetime import date
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.core.errors import InputFormatError
from src.series_core.models import EventLog, TimeSeries, add_months, month_start

logger = logging.getLogger(__name__)

DATE_COLUMN = "Date"
DATE_FORMAT = "%m/%d/%Y"


def read_event_csv(csv_path: str) -> EventLog:
    """
    Reads an event table (one row per event). Only the `Date` column
    (MM/DD/YYYY) is used; every other column is ignored.
    """
    if not os.path.exists(csv_path):
        raise InputFormatError(f"File {csv_path} not found.")

    try:
        df = pd.read_csv(csv_path, usecols=lambda name: name == DATE_COLUMN, dtype=str)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InputFormatError(f"Error reading CSV {csv_path}: {e}") from e

    if DATE_COLUMN not in df.columns:
        raise InputFormatError(f"{csv_path}: missing required column '{DATE_COLUMN}'")
    if df.empty:
        raise InputFormatError(f"{csv_path}: event log is empty")

    parsed = pd.to_datetime(df[DATE_COLUMN].str.strip(), format=DATE_FORMAT, errors="coerce")
    bad_rows = parsed.isna()
    if bad_rows.any():
        # Header is row 1
        for index in df.index[bad_rows][:20]:
            logger.warning("Row %d: unparseable date %r", index + 2, df.at[index, DATE_COLUMN])
        raise InputFormatError(f"{csv_path}: {int(bad_rows.sum())} row(s) with unparseable dates")

    try:
        events = EventLog(timestamps=tuple(parsed.dt.date))
    except ValidationError as ve:
        raise InputFormatError(f"{csv_path}: {ve.errors()[0]['msg']}") from ve

    logger.info("Read %d events from %s (%s .. %s)", len(events), csv_path, events.timestamps[0], events.timestamps[-1])
    return events


def aggregate_events(events: EventLog, step_months: int, origin: Optional[date] = None) -> TimeSeries:
    """
    Counts events per calendar interval [origin + k*step, origin + (k+1)*step).
    Intervals without events give 0; the last interval holds the last event.
    """
    if step_months < 1:
        raise InputFormatError("step_months must be >= 1")
    if len(events) == 0:
        raise InputFormatError("event log is empty")

    first, last = events.timestamps[0], events.timestamps[-1]
    origin = origin or month_start(first)
    if origin > first:
        raise InputFormatError(f"origin {origin} is after the first event {first}")

    # 1. Boundaries of every interval up to the one containing the last event
    months_span = (last.year - origin.year) * 12 + (last.month - origin.month)
    n_intervals = max(1, months_span // step_months)
    while add_months(origin, n_intervals * step_months) <= last:
        n_intervals += 1
    edges = np.array(
        [np.datetime64(add_months(origin, k * step_months), "D") for k in range(n_intervals + 1)]
    )

    # 2. Count with a single sorted search
    stamps = np.array([np.datetime64(t, "D") for t in events.timestamps])
    positions = np.searchsorted(edges, stamps, side="right") - 1
    counts = np.bincount(positions, minlength=n_intervals)[:n_intervals]

    logger.debug("Aggregated %d events into %d intervals of %d months", len(events), n_intervals, step_months)
    return TimeSeries.from_array(counts.astype(float), start=origin, step_months=step_months)
