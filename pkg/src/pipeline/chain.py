import logging
from typing import List, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import TransformError
from src.pipeline.config import TransformsSection
from src.series_core.models import DIFFERENCING_KINDS, ForecastMode, TimeSeries, TransformKind, TransformState
from src.series_core.transforms import (
    apply_with_state,
    arcsin_transform,
    difference,
    ewma,
    log_transform,
    moving_average,
    restore_pointwise,
    undifference,
)

logger = logging.getLogger(__name__)


class ChainStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: TransformKind
    lag: int = Field(default=1, ge=1, description="Differencing lag")
    margin: float = 1e-3
    alpha: float = 0.3
    window: int = 3


def steps_from_config(section: TransformsSection) -> List[ChainStep]:
    """`difference` expands into difference_order single-lag steps."""
    steps: List[ChainStep] = []
    for kind in section.chain:
        if kind == TransformKind.DIFFERENCE:
            steps += [ChainStep(kind=kind, lag=1)] * section.difference_order
        elif kind == TransformKind.SEASONAL_DIFFERENCE:
            steps.append(ChainStep(kind=kind, lag=section.seasonal_lag))
        else:
            steps.append(ChainStep(kind=kind, margin=section.arcsin_margin, alpha=section.ewma_alpha, window=section.ma_window))
    return steps


class TransformChain:
    """
    Transforms fitted on the training prefix and applied to the whole
    series. Every stage is a pandas Series indexed by absolute position in
    the original series, so stages shortened by differencing or smoothing
    stay aligned with it.
    """

    def __init__(self, steps: List[ChainStep]):
        self.steps = list(steps)
        self.states: List[TransformState] = []
        self.stages: List[pd.Series] = []
        self._base: Optional[TimeSeries] = None
        self.n_train = 0

    # --- conversions ---
    def _ts(self, stage: pd.Series) -> TimeSeries:
        return self._base.with_values(stage.to_numpy(), offset=int(stage.index[0]))

    @staticmethod
    def _stage(ts: TimeSeries, offset: int) -> pd.Series:
        return pd.Series(ts.array, index=pd.RangeIndex(offset, offset + len(ts)))

    # --- forward ---
    def _forward(self, step: ChainStep, prev: pd.Series) -> pd.Series:
        train_part = prev[prev.index < self.n_train]
        if train_part.empty:
            raise TransformError(f"{step.kind.value}: nothing left of the training prefix")
        first = int(prev.index[0])

        if step.kind == TransformKind.ARCSIN_MINMAX:
            _, state = arcsin_transform(self._ts(train_part), margin=step.margin)
            out = apply_with_state(self._ts(prev), state)
        elif step.kind == TransformKind.LOG:
            out, state = log_transform(self._ts(prev))
        elif step.kind == TransformKind.EWMA:
            out, state = ewma(self._ts(prev), step.alpha)
        elif step.kind == TransformKind.MOVING_AVERAGE:
            out, state = moving_average(self._ts(prev), step.window)
            first += step.window - 1
        else:
            seasonal = step.lag if step.kind == TransformKind.SEASONAL_DIFFERENCE else 0
            d = 0 if seasonal else 1
            # Tails for recursive restore come from the training prefix only
            _, state = difference(self._ts(train_part), d=d, seasonal_lag=seasonal)
            out, _ = difference(self._ts(prev), d=d, seasonal_lag=seasonal)
            first += step.lag
        self.states.append(state)
        return self._stage(out, first)

    def fit_apply(self, series: TimeSeries, n_train: int) -> pd.Series:
        """Fits every step on series[:n_train]; returns the last stage over the whole series."""
        if not 1 <= n_train <= len(series):
            raise TransformError(f"training prefix {n_train} out of range for {len(series)} points")
        self._base = series
        self.n_train = n_train
        self.states = []
        self.stages = [self._stage(series, 0)]
        for step in self.steps:
            self.stages.append(self._forward(step, self.stages[-1]))
        logger.debug("Chain %s leaves %d points from position %d", [s.kind.value for s in self.steps], len(self.stages[-1]), self.offset)
        return self.stages[-1]

    @property
    def offset(self) -> int:
        """First position where the last stage is defined."""
        return int(self.stages[-1].index[0])

    # --- inverse ---
    def restore(self, predicted: pd.Series, mode: ForecastMode) -> pd.Series:
        """
        Maps predictions of the last stage back to original units.
        Recursive: differencing is integrated from the training tail, so
        predictions must start right after it. One-step: each differenced
        prediction is added to the observed previous-stage value `lag` back.
        Smoothing steps pass values through.
        """
        if not self.stages:
            raise TransformError("chain must be fitted before restoring")
        out = predicted.astype(float)
        for step, state, prev in reversed(list(zip(self.steps, self.states, self.stages[:-1]))):
            if state.kind in DIFFERENCING_KINDS:
                if mode == ForecastMode.RECURSIVE:
                    if int(out.index[0]) != self.n_train:
                        raise TransformError("recursive restore needs predictions that start after the training prefix")
                    out = self._stage(undifference(self._ts(out), state, continuation=True), int(out.index[0]))
                else:
                    out = out + prev.reindex(out.index - step.lag).to_numpy()
            else:
                out = self._stage(restore_pointwise(self._ts(out), state), int(out.index[0]))
        return out
