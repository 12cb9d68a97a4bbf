from typing import Any, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.series_core.models import TimeSeries


class CvSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_splits: int = Field(default=3, ge=1)
    gap: int = Field(default=0, ge=0)


class Fold(BaseModel):
    """Train [0, train_end), test [test_start, test_end)."""
    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=1)
    train_end: int = Field(..., ge=1)
    test_start: int
    test_end: int

    @model_validator(mode="after")
    def check_no_leakage(self) -> "Fold":
        if self.test_start < self.train_end:
            raise ValueError("test range must start after the training range")
        if self.test_end <= self.test_start:
            raise ValueError("test range must be non-empty")
        return self

    @property
    def test_size(self) -> int:
        return self.test_end - self.test_start

    def slice(self, ts: TimeSeries) -> Tuple[TimeSeries, TimeSeries]:
        values = ts.array
        if self.test_end > len(values):
            raise ValueError(f"fold {self.index} ends at {self.test_end}, series has {len(values)} points")
        train = ts.with_values(values[: self.train_end])
        test = ts.with_values(values[self.test_start: self.test_end], offset=self.test_start)
        return train, test


class MapeResult(BaseModel):
    value: float = Field(..., ge=0.0, description="Percentage")
    excluded: int = Field(default=0, ge=0, description="Points skipped because the target is zero")


class RegressionReport(BaseModel):
    mape: Optional[float] = None
    mape_excluded: int = 0
    grouped_mape: Optional[float] = None
    group_size: int = Field(default=1, ge=1)
    mse: float
    rmse: float
    mae: float


class CandidateScore(BaseModel):
    index: int
    label: str
    fold_scores: List[float] = Field(default_factory=list)
    mean: Optional[float] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class GridSearchResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    best: Any
    best_index: int
    folds: List[Fold]
    scores: List[CandidateScore]

    @property
    def failures(self) -> List[CandidateScore]:
        return [s for s in self.scores if s.failed]

    def to_document(self) -> dict:
        return {
            "folds": [f.model_dump() for f in self.folds],
            "candidates": [s.model_dump() for s in self.scores],
            "winner": {"index": self.best_index, "label": self.scores[self.best_index].label},
        }
