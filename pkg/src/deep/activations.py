from typing import Callable, Dict, NamedTuple

import numpy as np
from scipy.special import expit

from src.core.errors import ConfigError

ArrayFn = Callable[[np.ndarray], np.ndarray]


class Activation(NamedTuple):
    """`derivative` takes the same pre-activation input as `fn`."""
    fn: ArrayFn
    derivative: ArrayFn


def _sigmoid_grad(z: np.ndarray) -> np.ndarray:
    s = expit(z)
    return s * (1.0 - s)


def _tanh_grad(z: np.ndarray) -> np.ndarray:
    return 1.0 - np.tanh(z) ** 2


ACTIVATIONS: Dict[str, Activation] = {
    "sigmoid": Activation(expit, _sigmoid_grad),
    "tanh": Activation(np.tanh, _tanh_grad),
    "relu": Activation(lambda z: np.maximum(z, 0.0), lambda z: (z > 0.0).astype(float)),
    "softplus": Activation(lambda z: np.logaddexp(0.0, z), expit),
    "linear": Activation(lambda z: z, np.ones_like),
}


def register_activation(name: str, fn: ArrayFn, derivative: ArrayFn) -> None:
    """Adds a hidden activation; BPTT needs the analytic derivative."""
    if name in ACTIVATIONS:
        raise ConfigError(f"activation '{name}' is already registered")
    ACTIVATIONS[name] = Activation(fn, derivative)


def get_activation(name: str) -> Activation:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ConfigError(f"unknown activation '{name}', choose from {sorted(ACTIVATIONS)}") from None


sigmoid = ACTIVATIONS["sigmoid"]
