from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.series_core.models import TimeSeries, TransformState


class ArimaSpec(BaseModel):
    """Seasonal ARIMA(p, d, q)(P, D, Q)_m orders."""
    model_config = ConfigDict(frozen=True)

    p: int = Field(default=0, ge=0)
    d: int = Field(default=0, ge=0)
    q: int = Field(default=0, ge=0)
    P: int = Field(default=0, ge=0)
    D: int = Field(default=0, ge=0)
    Q: int = Field(default=0, ge=0)
    m: int = Field(default=1, ge=1, description="Seasonal period; 1 means non-seasonal")
    with_intercept: bool = True

    @model_validator(mode="after")
    def check_orders(self) -> "ArimaSpec":
        if (self.P, self.D, self.Q) != (0, 0, 0) and self.m < 2:
            raise ValueError("seasonal orders need a seasonal period m >= 2")
        # Pure differencing (random walk) is allowed with nothing but sigma2 to estimate
        if self.n_coefficients == 0 and not self.with_intercept and self.d + self.D == 0:
            raise ValueError("spec estimates nothing: add an order or the intercept")
        return self

    @property
    def n_coefficients(self) -> int:
        return self.p + self.q + self.P + self.Q

    @property
    def n_params(self) -> int:
        """Estimated parameters counted by AIC: coefficients, intercept, sigma2."""
        return self.n_coefficients + int(self.with_intercept) + 1

    @property
    def ar_degree(self) -> int:
        return self.p + self.P * self.m

    @property
    def ma_degree(self) -> int:
        return self.q + self.Q * self.m

    @property
    def min_length(self) -> int:
        """Series must be strictly longer than this."""
        return self.ar_degree + self.ma_degree + self.d + self.D * self.m

    @property
    def sort_key(self) -> Tuple[int, ...]:
        return (self.p, self.q, self.P, self.Q, self.d, self.D)

    @property
    def label(self) -> str:
        text = f"ARIMA({self.p},{self.d},{self.q})"
        if self.m > 1:
            text += f"({self.P},{self.D},{self.Q})[{self.m}]"
        return text


class FittedArima(BaseModel):
    spec: ArimaSpec
    phi: List[float]
    theta: List[float]
    Phi: List[float]
    Theta: List[float]
    intercept: float = 0.0
    mean: float = Field(default=0.0, description="Mean of the differenced series; intercept = mean * (1 - sum(ar))")
    converged: bool = True
    sigma2: float = Field(..., gt=0.0)
    aic: float
    loglik: float
    diff_state: List[TransformState] = Field(default_factory=list, description="Applied in order; undone in reverse")
    history: TimeSeries = Field(..., description="Training series in the units given to fit")
    differenced: List[float] = Field(..., description="Training series after the d and D passes")
    residuals: List[float]

    @model_validator(mode="after")
    def check_lengths(self) -> "FittedArima":
        expected = (self.spec.p, self.spec.q, self.spec.P, self.spec.Q)
        actual = (len(self.phi), len(self.theta), len(self.Phi), len(self.Theta))
        if expected != actual:
            raise ValueError(f"coefficient lengths {actual} do not match orders {expected}")
        if len(self.residuals) != len(self.differenced):
            raise ValueError("one residual per differenced training point")
        return self


class ForecastResult(BaseModel):
    horizon: int = Field(..., ge=1)
    values: List[float] = Field(..., description="Units of the series given to fit")
    transformed_values: List[float] = Field(..., description="Differenced (model) units")

    @model_validator(mode="after")
    def check_horizon(self) -> "ForecastResult":
        if len(self.values) != self.horizon or len(self.transformed_values) != self.horizon:
            raise ValueError("forecast lists must have length == horizon")
        return self
