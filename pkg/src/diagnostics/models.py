from typing import Dict, List, Tuple

from pydantic import BaseModel, Field, model_validator

SIGNIFICANCE_LEVELS = ("1%", "5%", "10%")


class AdfResult(BaseModel):
    """Augmented Dickey-Fuller test, constant-only regression."""
    statistic: float
    p_value: float = Field(..., ge=0.0, le=1.0)
    lags_used: int = Field(..., ge=0)
    n_obs: int = Field(..., gt=0, description="Rows entering the final regression")
    critical_values: Dict[str, float]
    stationary: bool

    @model_validator(mode="after")
    def check_consistency(self) -> "AdfResult":
        levels = [self.critical_values[level] for level in SIGNIFICANCE_LEVELS]
        if not levels[0] < levels[1] < levels[2]:
            raise ValueError("critical values must increase from the 1% to the 10% level")
        if self.stationary != (self.statistic < self.critical_values["5%"]):
            raise ValueError("stationary flag disagrees with the 5% critical value")
        return self

    @property
    def conclusion(self) -> Tuple[str, str]:
        if self.stationary:
            return "Reject the null hypothesis", "Data is stationary"
        return "Fail to reject the null hypothesis", "Data is non-stationary"

    def to_document(self) -> dict:
        return {
            "statistic": self.statistic,
            "pvalue": self.p_value,
            "lags": self.lags_used,
            "nobs": self.n_obs,
            "critical_values": dict(self.critical_values),
            "conclusion": list(self.conclusion),
        }


class CorrelogramResult(BaseModel):
    values: List[float] = Field(..., min_length=1, description="Indexed by lag 0..L")
    band: float = Field(..., gt=0.0, description="Symmetric confidence half-width")

    @model_validator(mode="after")
    def check_bounded(self) -> "CorrelogramResult":
        if any(abs(v) > 1.0 + 1e-9 for v in self.values):
            raise ValueError("correlations must lie in [-1, 1]")
        return self

    @property
    def max_lag(self) -> int:
        return len(self.values) - 1
