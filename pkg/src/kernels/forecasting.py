from typing import Callable, Optional, Sequence, Union

import numpy as np

from src.core.errors import DimensionError, ModelError
from src.kernels.embedding import window_features
from src.kernels.kernel_ridge import krr_predict
from src.kernels.models import EmbeddingSpec, KrrModel, SvrModel
from src.kernels.svr import svr_predict
from src.series_core.models import ForecastMode

Predictor = Callable[[np.ndarray], np.ndarray]


def as_predictor(model: Union[KrrModel, SvrModel, Predictor]) -> Predictor:
    if isinstance(model, KrrModel):
        return lambda X: krr_predict(model, X)
    if isinstance(model, SvrModel):
        return lambda X: svr_predict(model, X)
    if callable(model):
        return model
    raise ModelError(f"cannot forecast with a {type(model).__name__}")


def forecast_recursive(
    model: Union[KrrModel, SvrModel, Predictor],
    history: Sequence[float],
    horizon: int,
    embedding: EmbeddingSpec,
    mode: ForecastMode = ForecastMode.RECURSIVE,
    observed: Optional[Sequence[float]] = None,
    start_index: int = 0,
) -> np.ndarray:
    """
    Recursive mode feeds each prediction back into the lag window.
    One-step mode slides the window over `observed` (the true values that
    follow `history`) and returns one prediction per observed point.
    `start_index` is the absolute index of history[0].
    """
    if horizon < 1:
        raise ModelError(f"forecast horizon must be >= 1, got {horizon}")
    history = np.asarray(history, dtype=float)
    w = embedding.window
    if len(history) < w:
        raise DimensionError(f"history of length {len(history)} is shorter than window {w}")
    predict = as_predictor(model)
    first = start_index + len(history)

    if mode == ForecastMode.ONE_STEP:
        if observed is None or len(observed) != horizon:
            raise DimensionError("one-step mode needs exactly `horizon` observed values")
        stream = np.concatenate((history, np.asarray(observed, dtype=float)))
        offset = len(history)
        X = np.array([window_features(stream[offset + k - w: offset + k], first + k, embedding) for k in range(horizon)])
        return np.asarray(predict(X), dtype=float)

    window = list(history[-w:])
    out = np.empty(horizon)
    for k in range(horizon):
        features = window_features(np.asarray(window[-w:]), first + k, embedding)
        out[k] = float(np.asarray(predict(features[None, :]))[0])
        window.append(out[k])
    return out
