import configparser
import logging
import os
from datetime import date
from enum import Enum
from typing import Annotated, List, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.core.errors import ConfigError
from src.deep.models import InitializerKind
from src.kernels.models import KernelKind
from src.series_core.models import ForecastMode, TransformKind

logger = logging.getLogger(__name__)

MONTHS_PER_YEAR = 12


def _comma_list(value):
    # "a, b, c" -> ["a", "b", "c"]; scalars become one-element grids
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


Grid = Annotated[List[float], BeforeValidator(_comma_list), Field(min_length=1)]
IntGrid = Annotated[List[int], BeforeValidator(_comma_list), Field(min_length=1)]


class Family(str, Enum):
    ARIMA = "arima"
    AUTO_ARIMA = "auto_arima"
    KRR = "krr"
    SVR = "svr"
    RNN = "rnn"
    LSTM = "lstm"
    BILSTM = "bilstm"
    GRU = "gru"


ARIMA_FAMILIES = (Family.ARIMA, Family.AUTO_ARIMA)
KERNEL_FAMILIES = (Family.KRR, Family.SVR)
RECURRENT_FAMILIES = (Family.RNN, Family.LSTM, Family.BILSTM, Family.GRU)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SeriesSection(_Section):
    source: str = Field(default="series", pattern="^(series|events)$")
    step_months: int = Field(default=12, ge=1)
    origin: Optional[date] = None


class TransformsSection(_Section):
    chain: Annotated[List[TransformKind], BeforeValidator(_comma_list)] = Field(default_factory=list)
    arcsin_margin: float = Field(default=1e-3, gt=0.0, lt=1.0)
    ewma_alpha: float = Field(default=0.3, gt=0.0, le=1.0)
    ma_window: int = Field(default=3, ge=1)
    difference_order: int = Field(default=1, ge=1)
    seasonal_lag: int = Field(default=12, ge=1, description="Unset in a pipeline config: steps per year")

    @field_validator("chain")
    @classmethod
    def at_most_one_pointwise(cls, chain: List[TransformKind]) -> List[TransformKind]:
        for kind in (TransformKind.ARCSIN_MINMAX, TransformKind.LOG):
            if chain.count(kind) > 1:
                raise ValueError(f"transform chain may contain at most one {kind.value}")
        return chain


class ModelSection(_Section):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    family: Family
    forecast_mode: ForecastMode = ForecastMode.ONE_STEP
    # ARIMA: grids of orders; auto_arima reads the max_* / *_range keys
    p: IntGrid = [1]
    d: IntGrid = [0]
    q: IntGrid = [0]
    P: IntGrid = [0]
    D: IntGrid = [0]
    Q: IntGrid = [0]
    m: int = Field(default=1, ge=1, description="Unset in a pipeline config: steps per year")
    with_intercept: bool = True
    max_p: int = Field(default=3, ge=0)
    max_q: int = Field(default=3, ge=0)
    max_P: int = Field(default=0, ge=0)
    max_Q: int = Field(default=0, ge=0)
    d_range: IntGrid = [0, 1]
    D_range: IntGrid = [0]
    n_jobs: int = Field(default=1, ge=1)
    # Kernels
    use_default_grid: bool = False
    kernel: Annotated[List[KernelKind], BeforeValidator(_comma_list)] = [KernelKind.RBF]
    gamma: Grid = [0.1]
    degree: IntGrid = [2]
    coef0: float = 1.0
    lam: Grid = Field(default=[1e-2], alias="lambda")
    C: Grid = [1.0]
    epsilon: Grid = [0.1]
    tol: float = Field(default=1e-3, gt=0.0)
    max_iter: int = Field(default=100_000, ge=1)
    standardize: bool = True
    time_index: bool = False
    # Kernels and recurrent networks
    window: IntGrid = [4]
    # Recurrent networks
    hidden_size: IntGrid = [16]
    activation: Annotated[List[str], BeforeValidator(_comma_list)] = ["tanh"]
    learning_rate: Grid = [0.01]
    epochs: IntGrid = [100]
    batch_size: IntGrid = [32]
    stateful: bool = False
    initializer: InitializerKind = InitializerKind.UNIFORM
    init_low: float = -0.5
    init_high: float = 0.5
    init_mean: float = 0.0
    init_std: float = Field(default=0.1, gt=0.0)
    forget_bias: float = 1.0


class CvSection(_Section):
    n_splits: int = Field(default=3, ge=1)
    gap: int = Field(default=0, ge=0)
    n_jobs: int = Field(default=1, ge=1)


class RunSection(_Section):
    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    seed: int = 0
    group_size: int = Field(default=1, ge=1)
    period: Optional[int] = Field(default=None, ge=2, description="Decomposition period for diagnose")
    max_lag: int = Field(default=20, ge=1, description="Correlogram lags for diagnose")


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    series: SeriesSection = Field(default_factory=SeriesSection)
    transforms: TransformsSection = Field(default_factory=TransformsSection)
    model: ModelSection
    cv: CvSection = Field(default_factory=CvSection)
    run: RunSection = Field(default_factory=RunSection)

    @model_validator(mode="before")
    @classmethod
    def seasonal_defaults(cls, data):
        """Unset seasonal periods default to the steps per year of the aggregation."""
        if not isinstance(data, dict):
            return data
        series = data.get("series") or {}
        try:
            step = series.get("step_months", 12) if isinstance(series, dict) else series.step_months
            per_year = max(1, MONTHS_PER_YEAR // int(step))
        except (AttributeError, TypeError, ValueError, ZeroDivisionError):
            return data

        data = dict(data)
        model = data.get("model")
        if isinstance(model, dict) and "m" not in model:
            data["model"] = {**model, "m": per_year}
        transforms = data.get("transforms") or {}
        if isinstance(transforms, dict) and "seasonal_lag" not in transforms:
            data["transforms"] = {**transforms, "seasonal_lag": per_year}
        return data

    @model_validator(mode="after")
    def check_family_chain(self) -> "PipelineConfig":
        differencing = {TransformKind.DIFFERENCE, TransformKind.SEASONAL_DIFFERENCE}
        if self.model.family in ARIMA_FAMILIES and differencing.intersection(self.transforms.chain):
            raise ValueError("ARIMA families difference internally (d, D); remove differencing from the transform chain")
        return self

    def with_seed(self, seed: Optional[int]) -> "PipelineConfig":
        if seed is None:
            return self
        return self.model_copy(update={"run": self.run.model_copy(update={"seed": seed})})


SECTIONS = ("series", "transforms", "model", "cv", "run")


def load_config(path: str) -> PipelineConfig:
    """Reads the INI file; every section maps onto one pydantic sub-model."""
    if not os.path.exists(path):
        raise ConfigError(f"Config file {path} not found.")
    parser = configparser.ConfigParser(interpolation=None)
    # Keys are case sensitive (P vs p)
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"Error reading config {path}: {e}") from e

    unknown = set(parser.sections()) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"{path}: unknown section(s) {sorted(unknown)}")
    if not parser.has_section("model"):
        raise ConfigError(f"{path}: a [model] section with a `family` key is required")

    raw = {section: dict(parser.items(section)) for section in parser.sections()}
    try:
        config = PipelineConfig.model_validate(raw)
    except ValidationError as ve:
        first = ve.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"{path}: {location}: {first['msg']}") from ve
    logger.debug("Loaded config %s: family=%s chain=%s", path, config.model.family.value, [k.value for k in config.transforms.chain])
    return config
