from datetime import date
from enum import Enum
from typing import ClassVar, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def add_months(start: date, months: int) -> date:
    """Calendar-aware month shift (Jan 31 + 1 month -> Feb 28/29)."""
    return (pd.Timestamp(start) + pd.DateOffset(months=months)).date()


def month_start(day: date) -> date:
    return day.replace(day=1)


# --- Enums ---
class TransformKind(str, Enum):
    DIFFERENCE = "difference"
    SEASONAL_DIFFERENCE = "seasonal_difference"
    ARCSIN_MINMAX = "arcsin_minmax"
    LOG = "log"
    EWMA = "ewma"
    MOVING_AVERAGE = "moving_average"


DIFFERENCING_KINDS = (TransformKind.DIFFERENCE, TransformKind.SEASONAL_DIFFERENCE)
NON_INVERTIBLE_KINDS = (TransformKind.EWMA, TransformKind.MOVING_AVERAGE)


# --- Event data ---
class EventLog(BaseModel):
    """
    Day-resolution event instants (one per crash report). Sorted on
    construction; every instant must fall inside [earliest, latest].
    """
    model_config = ConfigDict(frozen=True)

    EARLIEST: ClassVar[date] = date(1800, 1, 1)
    LATEST: ClassVar[date] = date(2100, 12, 31)

    timestamps: Tuple[date, ...] = Field(..., description="Event dates (UTC)")

    @field_validator("timestamps")
    @classmethod
    def sort_and_bound(cls, value: Tuple[date, ...]) -> Tuple[date, ...]:
        if not value:
            raise ValueError("event log is empty")
        ordered = tuple(sorted(value))
        if ordered[0] < cls.EARLIEST or ordered[-1] > cls.LATEST:
            raise ValueError(f"event dates must lie within [{cls.EARLIEST}, {cls.LATEST}]")
        return ordered

    def __len__(self) -> int:
        return len(self.timestamps)


# --- Regular series ---
class TimeSeries(BaseModel):
    """Regularly spaced real-valued series: start instant + whole-month step."""
    model_config = ConfigDict(frozen=True)

    start: date
    step_months: int = Field(default=1, ge=1)
    values: Tuple[float, ...] = Field(..., min_length=1)

    @classmethod
    def from_array(cls, values, start: date, step_months: int = 1) -> "TimeSeries":
        return cls(start=start, step_months=step_months, values=tuple(float(v) for v in np.asarray(values, dtype=float)))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def end(self) -> date:
        return self.date_at(len(self.values) - 1)

    def date_at(self, index: int) -> date:
        return add_months(self.start, index * self.step_months)

    def timestamps(self) -> List[date]:
        return [self.date_at(k) for k in range(len(self.values))]

    def with_values(self, values, offset: int = 0) -> "TimeSeries":
        """Same grid, new values; `offset` moves the start by whole steps."""
        return TimeSeries.from_array(values, start=self.date_at(offset), step_months=self.step_months)

    def __len__(self) -> int:
        return len(self.values)


class PartialSeries(BaseModel):
    """Regular series with explicit missing slots (None), used by decomposition."""
    model_config = ConfigDict(frozen=True)

    start: date
    step_months: int = Field(default=1, ge=1)
    values: Tuple[Optional[float], ...] = Field(..., min_length=1)

    def defined(self) -> np.ndarray:
        return np.array([v is not None for v in self.values])

    def __len__(self) -> int:
        return len(self.values)


# --- Transform bookkeeping ---
class ArcsinBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    minimum: float
    maximum: float
    margin: float = Field(default=1e-3, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def check_span(self) -> "ArcsinBounds":
        if not self.maximum > self.minimum:
            raise ValueError("arcsin bounds need maximum > minimum")
        return self


class TransformState(BaseModel):
    """
    Everything needed to undo a forward transform. For differencing, `seeds`
    holds the leading values each pass removed and `tails` the last `lag`
    values each pass saw, both in pass order.
    """
    model_config = ConfigDict(frozen=True)

    kind: TransformKind
    lags: Tuple[int, ...] = ()
    seeds: Tuple[Tuple[float, ...], ...] = ()
    tails: Tuple[Tuple[float, ...], ...] = ()
    bounds: Optional[ArcsinBounds] = None
    params: dict = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_payload(self) -> "TransformState":
        if self.kind in DIFFERENCING_KINDS:
            if len(self.seeds) != len(self.lags) or len(self.tails) != len(self.lags):
                raise ValueError("differencing state needs one seed block and one tail block per pass")
        if self.kind == TransformKind.ARCSIN_MINMAX and self.bounds is None:
            raise ValueError("arcsin state needs bounds")
        return self

    @property
    def invertible(self) -> bool:
        return self.kind not in NON_INVERTIBLE_KINDS


class ForecastMode(str, Enum):
    """Recursive feeds predictions back; one-step reads the observed lags."""
    RECURSIVE = "recursive"
    ONE_STEP = "one_step"


class SplitSpec(BaseModel):
    test_fraction: float = Field(..., gt=0.0, lt=1.0)
