from enum import Enum
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.deep.activations import ACTIVATIONS


class CellKind(str, Enum):
    SIMPLE = "simple"
    LSTM = "lstm"
    GRU = "gru"


# Gates per cell, in the order their weights are drawn
GATES: Dict[CellKind, Tuple[str, ...]] = {
    CellKind.SIMPLE: ("h",),
    CellKind.LSTM: ("f", "i", "c", "o"),
    CellKind.GRU: ("z", "r", "h"),
}


class InitializerKind(str, Enum):
    UNIFORM = "uniform"
    NORMAL = "normal"
    TRUNCATED_NORMAL = "truncated_normal"


class Initializer(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: InitializerKind = InitializerKind.UNIFORM
    low: float = -0.5
    high: float = 0.5
    mean: float = 0.0
    std: float = Field(default=0.1, gt=0.0)
    seed: int = 0

    @model_validator(mode="after")
    def check_range(self) -> "Initializer":
        if self.kind == InitializerKind.UNIFORM and not self.high > self.low:
            raise ValueError("uniform initializer needs high > low")
        return self

    def draw(self, rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
        if self.kind == InitializerKind.UNIFORM:
            return rng.uniform(self.low, self.high, size=shape)
        values = rng.normal(self.mean, self.std, size=shape)
        if self.kind == InitializerKind.TRUNCATED_NORMAL:
            outside = np.abs(values - self.mean) > 2.0 * self.std
            while outside.any():
                values[outside] = rng.normal(self.mean, self.std, size=int(outside.sum()))
                outside = np.abs(values - self.mean) > 2.0 * self.std
        return values


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(default=0.01, gt=0.0)
    epochs: int = Field(default=100, ge=1)
    batch_size: int = Field(default=32, ge=1)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)


class RnnConfig(BaseModel):
    """Architecture plus training hyperparameters of one recurrent model."""
    model_config = ConfigDict(frozen=True)

    cell: CellKind = CellKind.LSTM
    bidirectional: bool = False
    stateful: bool = False
    window: int = Field(default=8, ge=1, description="Input steps per sample")
    hidden_size: int = Field(default=16, ge=1)
    input_size: int = Field(default=1, ge=1)
    activation: str = Field(default="tanh", description="Candidate / cell-output activation")
    forget_bias: float = 1.0
    initializer: Initializer = Field(default_factory=Initializer)
    training: TrainConfig = Field(default_factory=TrainConfig)

    @field_validator("activation")
    @classmethod
    def known_activation(cls, value: str) -> str:
        if value not in ACTIVATIONS:
            raise ValueError(f"unknown activation '{value}'")
        return value

    @model_validator(mode="after")
    def check_modes(self) -> "RnnConfig":
        # A backward pass over later data cannot carry state forward in time
        if self.stateful and self.bidirectional:
            raise ValueError("stateful mode is not available for bidirectional models")
        return self

    @property
    def label(self) -> str:
        kind = ("bi" if self.bidirectional else "") + self.cell.value
        return f"{kind}(hidden={self.hidden_size}, window={self.window}, activation={self.activation}, lr={self.training.learning_rate:g}, epochs={self.training.epochs})"

    @property
    def directions(self) -> List[str]:
        return ["forward", "backward"] if self.bidirectional else ["forward"]

    @property
    def head_size(self) -> int:
        return self.hidden_size * len(self.directions)


class RnnModel(BaseModel):
    """
    Parameters keyed "<direction>.W_<gate>" / "<direction>.b_<gate>" with
    W shaped (hidden, hidden + input), plus "head.W" (1, head_size) and
    "head.b" (1,). `mean` / `std` are the training z-score constants.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: RnnConfig
    params: Dict[str, np.ndarray]
    mean: float = 0.0
    std: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def check_shapes(self) -> "RnnModel":
        H, D = self.config.hidden_size, self.config.input_size
        for direction in self.config.directions:
            for gate in GATES[self.config.cell]:
                if self.params[f"{direction}.W_{gate}"].shape != (H, H + D):
                    raise ValueError(f"{direction}.W_{gate} must be shaped {(H, H + D)}")
                if self.params[f"{direction}.b_{gate}"].shape != (H,):
                    raise ValueError(f"{direction}.b_{gate} must be shaped {(H,)}")
        if self.params["head.W"].shape != (1, self.config.head_size):
            raise ValueError(f"head.W must be shaped {(1, self.config.head_size)}")
        return self

    def standardize(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mean) / self.std

    def destandardize(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.std + self.mean
