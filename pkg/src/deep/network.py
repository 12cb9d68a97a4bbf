from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from src.core.errors import DimensionError
from src.deep.activations import get_activation
from src.deep.cells import (
    gru_backward,
    gru_forward,
    lstm_backward,
    lstm_forward,
    simple_backward,
    simple_forward,
)
from src.deep.models import GATES, CellKind, RnnConfig, RnnModel

Params = Dict[str, np.ndarray]


class CellState(NamedTuple):
    h: np.ndarray
    c: np.ndarray  # zeros for cells without a memory cell


def zero_state(config: RnnConfig, batch: int) -> CellState:
    shape = (batch, config.hidden_size)
    return CellState(np.zeros(shape), np.zeros(shape))


def init_params(config: RnnConfig) -> Params:
    """Weights from the initializer; biases zero except the LSTM forget gate."""
    rng = np.random.default_rng(config.initializer.seed)
    H, D = config.hidden_size, config.input_size
    params: Params = {}
    for direction in config.directions:
        for gate in GATES[config.cell]:
            params[f"{direction}.W_{gate}"] = config.initializer.draw(rng, (H, H + D))
            bias = np.zeros(H)
            if config.cell == CellKind.LSTM and gate == "f":
                bias[:] = config.forget_bias
            params[f"{direction}.b_{gate}"] = bias
    params["head.W"] = config.initializer.draw(rng, (1, config.head_size))
    params["head.b"] = np.zeros(1)
    return params


def direction_params(params: Params, direction: str) -> Params:
    prefix = f"{direction}."
    return {name[len(prefix):]: value for name, value in params.items() if name.startswith(prefix)}


def _as_batch(inputs: np.ndarray, config: RnnConfig) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim == 2:
        x = x[:, :, None]
    if x.shape[2] != config.input_size:
        raise DimensionError(f"inputs have {x.shape[2]} features, model expects {config.input_size}")
    return x


def _unroll(config: RnnConfig, params: Params, x: np.ndarray, state: CellState) -> Tuple[CellState, list]:
    act = get_activation(config.activation)
    h, c = state
    caches = []
    for t in range(x.shape[1]):
        if config.cell == CellKind.LSTM:
            h, c, cache = lstm_forward(x[:, t], h, c, params, act)
        elif config.cell == CellKind.GRU:
            h, cache = gru_forward(x[:, t], h, params, act)
        else:
            h, cache = simple_forward(x[:, t], h, params, act)
        caches.append(cache)
    return CellState(h, c), caches


def run_sequence(model: RnnModel, inputs: np.ndarray, state: Optional[CellState] = None, direction: str = "forward") -> CellState:
    """
    Unrolls one direction's cell over `inputs` (B, T[, D]) from `state`
    (zeros when None) and returns the final state.
    """
    x = _as_batch(inputs, model.config)
    if direction == "backward":
        x = x[:, ::-1]
    if state is None:
        state = zero_state(model.config, x.shape[0])
    final, _ = _unroll(model.config, direction_params(model.params, direction), x, state)
    return final


def _head(params: Params, features: np.ndarray) -> np.ndarray:
    return (features @ params["head.W"].T + params["head.b"]).ravel()


def predict_windows(model: RnnModel, windows: np.ndarray, state: Optional[CellState] = None) -> np.ndarray:
    """One prediction per window, in standardized units."""
    x = _as_batch(windows, model.config)
    if x.shape[1] != model.config.window:
        raise DimensionError(f"window of length {x.shape[1]}, model expects {model.config.window}")
    finals = [run_sequence(model, x, state if d == "forward" else None, d).h for d in model.config.directions]
    return _head(model.params, np.concatenate(finals, axis=1))


def forward(model: RnnModel, window: np.ndarray) -> float:
    return float(predict_windows(model, np.asarray(window, dtype=float)[None, :])[0])


def bptt_gradients(
    model: RnnModel,
    windows: np.ndarray,
    targets: np.ndarray,
    state: Optional[CellState] = None,
) -> Tuple[float, Params, CellState]:
    """
    Mean squared error over the batch and its exact gradient for every
    parameter, backpropagated through the full unroll. `state` seeds the
    forward direction and is treated as a constant. Returns
    (loss, gradients, final forward state).
    """
    config = model.config
    x = _as_batch(windows, config)
    y = np.asarray(targets, dtype=float).ravel()
    B = x.shape[0]
    if B == 0 or len(y) != B:
        raise DimensionError(f"{B} windows but {len(y)} targets")
    act = get_activation(config.activation)

    runs: List[Tuple[str, Params, CellState, list]] = []
    for direction in config.directions:
        params = direction_params(model.params, direction)
        seq = x if direction == "forward" else x[:, ::-1]
        start = state if (direction == "forward" and state is not None) else zero_state(config, B)
        final, caches = _unroll(config, params, seq, start)
        runs.append((direction, params, final, caches))

    features = np.concatenate([final.h for _, _, final, _ in runs], axis=1)
    residual = _head(model.params, features) - y
    loss = float(np.mean(residual**2))

    grads: Params = {name: np.zeros_like(value) for name, value in model.params.items()}
    d_out = (2.0 / B) * residual[:, None]
    grads["head.W"] = d_out.T @ features
    grads["head.b"] = d_out.sum(axis=0)
    d_features = d_out @ model.params["head.W"]

    H = config.hidden_size
    for k, (direction, params, _, caches) in enumerate(runs):
        local = {name: np.zeros_like(value) for name, value in params.items()}
        dh = d_features[:, k * H:(k + 1) * H]
        dc = np.zeros_like(dh)
        for cache in reversed(caches):
            if config.cell == CellKind.LSTM:
                dh, dc = lstm_backward(dh, dc, cache, params, local, act)
            elif config.cell == CellKind.GRU:
                dh = gru_backward(dh, cache, params, local, act)
            else:
                dh = simple_backward(dh, cache, params, local, act)
        for name, value in local.items():
            grads[f"{direction}.{name}"] = value

    return loss, grads, runs[0][2]
