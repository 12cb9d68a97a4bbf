import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import DimensionError, ModelError
from src.deep.models import RnnConfig, RnnModel
from src.deep.network import CellState, bptt_gradients, init_params, predict_windows
from src.series_core.models import ForecastMode

logger = logging.getLogger(__name__)

Batch = Tuple[np.ndarray, np.ndarray]


def sliding_windows(z: np.ndarray, window: int) -> Batch:
    """Overlapping (x_{t-w..t-1}, x_t) pairs."""
    if len(z) <= window:
        raise DimensionError(f"series of length {len(z)} is too short for window {window}")
    X = np.lib.stride_tricks.sliding_window_view(z[:-1], window)
    return np.array(X), z[window:].copy()


def _plain_batches(z: np.ndarray, config: RnnConfig) -> List[Batch]:
    X, y = sliding_windows(z, config.window)
    size = config.training.batch_size
    return [(X[k:k + size], y[k:k + size]) for k in range(0, len(y), size)]


def stateful_batches(z: np.ndarray, config: RnnConfig) -> List[Batch]:
    """
    Non-overlapping windows split into `batch_size` contiguous streams.
    Row s of batch k+1 continues row s of batch k, so the final state of
    one batch is the right initial state for the next. Windows that do not
    fill a whole batch are dropped.
    """
    w, B = config.window, config.training.batch_size
    n_windows = (len(z) - 1) // w
    per_stream = n_windows // B
    if per_stream < 1:
        raise ModelError(f"stateful training needs at least {B} windows of {w} steps, got {n_windows}")
    starts = np.arange(n_windows) * w
    X = np.stack([z[s:s + w] for s in starts])
    y = z[starts + w]
    batches = []
    for k in range(per_stream):
        rows = np.arange(B) * per_stream + k
        batches.append((X[rows], y[rows]))
    return batches


class Adam:
    def __init__(self, params: Dict[str, np.ndarray], config: RnnConfig):
        self.lr = config.training.learning_rate
        self.beta1 = config.training.beta1
        self.beta2 = config.training.beta2
        self.eps = config.training.adam_eps
        self.m = {name: np.zeros_like(value) for name, value in params.items()}
        self.v = {name: np.zeros_like(value) for name, value in params.items()}
        self.t = 0

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, g in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g**2
            m_hat = self.m[name] / (1.0 - self.beta1**self.t)
            v_hat = self.v[name] / (1.0 - self.beta2**self.t)
            params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _zscore(values: np.ndarray) -> Tuple[float, float]:
    std = float(values.std())
    return float(values.mean()), std if std > 0.0 else 1.0


def train(config: RnnConfig, series: Sequence[float]) -> Tuple[RnnModel, List[float]]:
    """
    Mini-batch Adam on standardized training values, batches in time order.
    Deterministic for a fixed initializer seed. Returns the model and the
    per-epoch mean training loss.
    """
    values = np.asarray(series, dtype=float)
    mean, std = _zscore(values)
    model = RnnModel(config=config, params=init_params(config), mean=mean, std=std)
    z = model.standardize(values)
    batches = stateful_batches(z, config) if config.stateful else _plain_batches(z, config)
    optimizer = Adam(model.params, config)

    history: List[float] = []
    for epoch in range(1, config.training.epochs + 1):
        state: Optional[CellState] = None
        total, count = 0.0, 0
        for X, y in batches:
            loss, grads, final = bptt_gradients(model, X, y, state)
            if not math.isfinite(loss):
                raise ModelError(f"training diverged at epoch {epoch} (loss {loss})")
            if config.stateful:
                state = CellState(final.h.copy(), final.c.copy())
            optimizer.step(model.params, grads)
            total += loss * len(y)
            count += len(y)
        history.append(total / count)
        logger.debug("epoch %d/%d loss %.6f", epoch, config.training.epochs, history[-1])

    logger.info("Trained %s (hidden=%d, window=%d): final loss %.6f", config.cell.value, config.hidden_size, config.window, history[-1])
    return model, history


def predict_series(
    model: RnnModel,
    history: Sequence[float],
    test_length: int,
    mode: ForecastMode = ForecastMode.ONE_STEP,
    observed: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """
    Predictions for the `test_length` points after `history`, in the
    units of `history`. One-step mode needs the observed test values for
    its lags. Every window starts from a zero state.
    """
    w = model.config.window
    history = np.asarray(history, dtype=float)
    if len(history) < w:
        raise DimensionError(f"history of length {len(history)} is shorter than window {w}")
    if test_length < 1:
        raise ModelError(f"test_length must be >= 1, got {test_length}")

    if mode == ForecastMode.ONE_STEP:
        if observed is None or len(observed) != test_length:
            raise DimensionError("one-step mode needs exactly `test_length` observed values")
        stream = model.standardize(np.concatenate((history[-w:], np.asarray(observed, dtype=float))))
        windows = np.lib.stride_tricks.sliding_window_view(stream[:-1], w)
        return model.destandardize(predict_windows(model, windows))

    window = list(model.standardize(history[-w:]))
    out = np.empty(test_length)
    for k in range(test_length):
        out[k] = predict_windows(model, np.asarray(window[-w:])[None, :])[0]
        window.append(out[k])
    return model.destandardize(out)


def rnn_to_document(model: RnnModel) -> dict:
    """JSON-ready dict; parameter arrays are flattened row-major."""
    return {
        "config": model.config.model_dump(mode="json"),
        "mean": model.mean,
        "std": model.std,
        "params": {name: {"shape": list(value.shape), "values": value.ravel().tolist()} for name, value in model.params.items()},
    }


def rnn_from_document(document: dict) -> RnnModel:
    params = {
        name: np.asarray(entry["values"], dtype=float).reshape(entry["shape"])
        for name, entry in document["params"].items()
    }
    return RnnModel(
        config=RnnConfig.model_validate(document["config"]),
        params=params,
        mean=document["mean"],
        std=document["std"],
    )
