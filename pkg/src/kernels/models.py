from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class KernelKind(str, Enum):
    RBF = "rbf"
    POLYNOMIAL = "polynomial"
    LINEAR = "linear"


class KernelSpec(BaseModel):
    """Only the parameters relevant to `kind` may be set."""
    model_config = ConfigDict(frozen=True)

    kind: KernelKind
    gamma: Optional[float] = Field(default=None, gt=0.0)
    degree: Optional[int] = Field(default=None, ge=1)
    coef0: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def default_coef0(cls, data):
        if isinstance(data, dict) and data.get("kind") in (KernelKind.POLYNOMIAL, "polynomial"):
            data = {**data}
            if data.get("coef0") is None:
                data["coef0"] = 1.0
        return data

    @model_validator(mode="after")
    def check_parameters(self) -> "KernelSpec":
        present = {name for name in ("gamma", "degree", "coef0") if getattr(self, name) is not None}
        required = {
            KernelKind.RBF: {"gamma"},
            KernelKind.POLYNOMIAL: {"degree", "coef0"},
            KernelKind.LINEAR: set(),
        }[self.kind]
        if present != required:
            raise ValueError(f"{self.kind.value} kernel takes exactly {sorted(required) or 'no parameters'}, got {sorted(present)}")
        return self

    @property
    def label(self) -> str:
        if self.kind == KernelKind.RBF:
            return f"rbf(gamma={self.gamma:g})"
        if self.kind == KernelKind.POLYNOMIAL:
            return f"polynomial(degree={self.degree}, coef0={self.coef0:g})"
        return "linear"


class EmbeddingSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    window: int = Field(default=4, ge=1, description="Lagged values per input vector")
    time_index: bool = Field(default=False, description="Append index / time_scale as an extra feature")
    time_scale: float = Field(default=1.0, gt=0.0)

    @property
    def dimension(self) -> int:
        return self.window + int(self.time_index)


class Standardizer(BaseModel):
    """Per-dimension z-score fitted on training inputs."""
    mean: List[float]
    scale: List[float]

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        std = X.std(axis=0)
        return cls(mean=X.mean(axis=0).tolist(), scale=np.where(std > 0.0, std, 1.0).tolist())

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (X - np.asarray(self.mean)) / np.asarray(self.scale)


class KrrModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    alpha: List[float]
    lam: float = Field(..., ge=0.0, alias="lambda")
    kernel: KernelSpec
    train_inputs: List[List[float]] = Field(..., description="Standardized when a standardizer is set")
    standardizer: Optional[Standardizer] = None

    @model_validator(mode="after")
    def check_lengths(self) -> "KrrModel":
        if len(self.alpha) != len(self.train_inputs):
            raise ValueError("one dual weight per training input")
        return self


class SvrModel(BaseModel):
    beta: List[float] = Field(..., description="alpha - alpha* per training point")
    b: float
    C: float = Field(..., gt=0.0)
    epsilon: float = Field(..., ge=0.0)
    kernel: KernelSpec
    train_inputs: List[List[float]]
    train_targets: List[float]
    standardizer: Optional[Standardizer] = None
    xi: List[float]
    xi_star: List[float]
    converged: bool = True
    iterations: int = 0
    objective_history: List[float] = Field(default_factory=list, description="Dual objective after each update")

    @model_validator(mode="after")
    def check_dual_feasibility(self) -> "SvrModel":
        n = len(self.train_inputs)
        if not len(self.beta) == len(self.train_targets) == len(self.xi) == len(self.xi_star) == n:
            raise ValueError("per-point lists must match the number of training inputs")
        beta = np.asarray(self.beta)
        if abs(beta.sum()) > 1e-6 * max(1.0, self.C):
            raise ValueError("dual coefficients must sum to zero")
        if np.any(np.abs(beta) > self.C + 1e-12):
            raise ValueError("dual coefficients must lie in [-C, C]")
        if min(self.xi + self.xi_star, default=0.0) < 0.0:
            raise ValueError("slacks must be non-negative")
        return self


class KrrParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float = Field(..., ge=0.0)
    kernel: KernelSpec

    @property
    def label(self) -> str:
        return f"KRR(lambda={self.lam:g}, {self.kernel.label})"


class SvrParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    C: float = Field(..., gt=0.0)
    epsilon: float = Field(..., ge=0.0)
    kernel: KernelSpec

    @property
    def label(self) -> str:
        return f"SVR(C={self.C:g}, epsilon={self.epsilon:g}, {self.kernel.label})"
