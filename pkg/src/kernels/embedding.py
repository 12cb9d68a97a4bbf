from typing import Tuple

import numpy as np
from scipy.spatial.distance import cdist

from src.core.errors import DimensionError
from src.kernels.models import EmbeddingSpec, KernelKind, KernelSpec


def window_features(window_values: np.ndarray, target_index: int, spec: EmbeddingSpec) -> np.ndarray:
    """Input vector for predicting the value at `target_index`."""
    if spec.time_index:
        return np.append(window_values, target_index / spec.time_scale)
    return np.asarray(window_values, dtype=float)


def embed(values: np.ndarray, spec: EmbeddingSpec, start_index: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    n - w supervised pairs ([x_{t-w}, ..., x_{t-1}], x_t) in time order.
    `start_index` is the absolute index of values[0], used by the time feature.
    """
    x = np.asarray(values, dtype=float)
    w = spec.window
    if len(x) <= w:
        raise DimensionError(f"series of length {len(x)} is too short for window {w}")
    inputs = np.lib.stride_tricks.sliding_window_view(x[:-1], w)
    targets = x[w:]
    if spec.time_index:
        index = (start_index + np.arange(w, len(x))) / spec.time_scale
        inputs = np.column_stack((inputs, index))
    return np.array(inputs, dtype=float), targets.copy()


def gram(kernel: KernelSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"kernel inputs have dimensions {X.shape[1]} and {Y.shape[1]}")
    if kernel.kind == KernelKind.RBF:
        return np.exp(-kernel.gamma * cdist(X, Y, "sqeuclidean"))
    if kernel.kind == KernelKind.POLYNOMIAL:
        return (X @ Y.T + kernel.coef0) ** kernel.degree
    return X @ Y.T
