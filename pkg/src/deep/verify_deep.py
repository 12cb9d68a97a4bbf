import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.errors import ConfigError, DimensionError, ModelError
from src.deep.activations import ACTIVATIONS, get_activation, register_activation
from src.deep.cells import gru_step, lstm_step, simple_step
from src.deep.models import CellKind, Initializer, InitializerKind, RnnConfig, RnnModel, TrainConfig
from src.deep.network import bptt_gradients, init_params, run_sequence
from src.deep.training import predict_series, rnn_from_document, rnn_to_document, stateful_batches, train
from src.series_core.models import ForecastMode

H, D = 3, 1


def _zero_params(gates):
    params = {}
    for gate in gates:
        params[f"W_{gate}"] = np.zeros((H, H + D))
        params[f"b_{gate}"] = np.zeros(H)
    return params


def _config(cell=CellKind.LSTM, **overrides) -> RnnConfig:
    settings = dict(
        cell=cell,
        window=4,
        hidden_size=H,
        initializer=Initializer(kind=InitializerKind.NORMAL, std=0.5, seed=1),
        training=TrainConfig(learning_rate=0.01, epochs=30, batch_size=8),
    )
    settings.update(overrides)
    return RnnConfig(**settings)


def _model(config: RnnConfig) -> RnnModel:
    return RnnModel(config=config, params=init_params(config))


# --- cells ---
def test_lstm_with_zero_weights_halves_the_cell():
    c_prev = np.array([[2.0, -2.0, 0.0]])
    h, c = lstm_step(np.array([[0.7]]), np.ones((1, H)), c_prev, _zero_params("fico"))
    assert c.tolist() == pytest.approx([[1.0, -1.0, 0.0]])
    assert h == pytest.approx(0.5 * np.tanh(0.5 * c_prev))


def test_gru_with_zero_weights_halves_the_state():
    h_prev = np.array([[1.0, -4.0, 0.5]])
    assert gru_step(np.array([[3.0]]), h_prev, _zero_params("zrh")) == pytest.approx(0.5 * h_prev)


def test_simple_cell():
    params = _zero_params("h")
    params["W_h"][:, H] = 1.0
    h = simple_step(np.array([[0.5]]), np.zeros((1, H)), params)
    assert h == pytest.approx(np.full((1, H), np.tanh(0.5)))


def test_cell_shape_mismatch():
    with pytest.raises(DimensionError):
        lstm_step(np.zeros((1, 2)), np.zeros((1, H)), np.zeros((1, H)), _zero_params("fico"))


def test_lstm_forget_gate_holds_or_clears_the_cell():
    c0 = np.array([[1.5, -0.7, 0.2]])
    x = np.array([[0.4]])
    params = _zero_params("fico")
    params["b_f"][:] = 20.0
    h, c = np.zeros((1, H)), c0
    for _ in range(50):
        h, c = lstm_step(x, h, c, params)
    assert np.allclose(c, c0, atol=1e-6)

    params["b_f"][:] = -20.0
    _, cleared = lstm_step(x, np.zeros((1, H)), c0, params)
    assert np.allclose(cleared, 0.0, atol=1e-6)


def test_gru_closed_update_gate_keeps_the_state():
    h0 = np.array([[0.9, -0.3, 0.05]])
    params = _zero_params("zrh")
    params["b_z"][:] = -20.0
    h = h0
    for step in range(50):
        h = gru_step(np.array([[float(step)]]), h, params)
    assert np.allclose(h, h0, atol=1e-6)


def test_lstm_step_with_all_ones_weights():
    hidden = 2
    params = {}
    for gate in "fico":
        params[f"W_{gate}"] = np.ones((hidden, hidden + 1))
        params[f"b_{gate}"] = np.ones(hidden)
    h_prev, c_prev, x = np.array([[0.1, -0.2]]), np.array([[0.5, -1.0]]), np.array([[0.3]])
    h, c = lstm_step(x, h_prev, c_prev, params)

    # Every gate sees 0.1 - 0.2 + 0.3 + 1
    gate = 1.0 / (1.0 + math.exp(-1.2))
    expected_c = [gate * 0.5 + gate * math.tanh(1.2), gate * -1.0 + gate * math.tanh(1.2)]
    assert c.tolist()[0] == pytest.approx(expected_c, abs=1e-12)
    assert h.tolist()[0] == pytest.approx([gate * math.tanh(value) for value in expected_c], abs=1e-12)


# --- gradients ---
def _numeric_gradient(model: RnnModel, windows, targets, name, state=None, step=1e-5) -> np.ndarray:
    value = model.params[name]
    grad = np.zeros_like(value)
    for index in np.ndindex(value.shape):
        original = value[index]
        value[index] = original + step
        plus = bptt_gradients(model, windows, targets, state)[0]
        value[index] = original - step
        minus = bptt_gradients(model, windows, targets, state)[0]
        value[index] = original
        grad[index] = (plus - minus) / (2.0 * step)
    return grad


@pytest.mark.parametrize(
    "cell,bidirectional,activation",
    [
        (CellKind.LSTM, False, "tanh"),
        (CellKind.LSTM, True, "tanh"),
        (CellKind.GRU, False, "tanh"),
        (CellKind.SIMPLE, False, "tanh"),
        (CellKind.GRU, False, "softplus"),
    ],
)
def test_bptt_matches_finite_differences(cell, bidirectional, activation):
    model = _model(_config(cell, bidirectional=bidirectional, activation=activation))
    rng = np.random.default_rng(0)
    windows = rng.normal(size=(5, 4))
    targets = rng.normal(size=5)

    _, grads, _ = bptt_gradients(model, windows, targets)
    for name in model.params:
        numeric = _numeric_gradient(model, windows, targets, name)
        scale = np.linalg.norm(grads[name]) + np.linalg.norm(numeric)
        if scale == 0.0:
            continue
        assert np.linalg.norm(grads[name] - numeric) / scale < 1e-4, name


def test_bptt_with_carried_state():
    model = _model(_config(CellKind.LSTM))
    rng = np.random.default_rng(1)
    windows, targets = rng.normal(size=(2, 4)), rng.normal(size=2)
    state = run_sequence(model, rng.normal(size=(2, 4)))

    _, grads, _ = bptt_gradients(model, windows, targets, state)
    numeric = _numeric_gradient(model, windows, targets, "forward.W_f", state)
    assert np.linalg.norm(grads["forward.W_f"] - numeric) / (np.linalg.norm(numeric) + 1e-12) < 1e-4


def test_state_carry_equals_one_long_unroll():
    model = _model(_config(CellKind.GRU))
    stream = np.sin(np.arange(12.0))[None, :]
    whole = run_sequence(model, stream)
    carried = run_sequence(model, stream[:, 6:], state=run_sequence(model, stream[:, :6]))
    assert np.allclose(whole.h, carried.h)


# --- configuration ---
def test_config_rules():
    with pytest.raises(ValidationError):
        RnnConfig(bidirectional=True, stateful=True)
    with pytest.raises(ValidationError):
        RnnConfig(activation="swish")
    with pytest.raises(ValidationError):
        Initializer(low=1.0, high=0.0)


def test_activation_registry():
    with pytest.raises(ConfigError):
        get_activation("swish")
    with pytest.raises(ConfigError):
        register_activation("tanh", np.tanh, np.tanh)
    relu = get_activation("relu")
    assert relu.derivative(np.array([-1.0, 2.0])).tolist() == [0.0, 1.0]


def test_forget_bias_and_truncation():
    config = _config(CellKind.LSTM, initializer=Initializer(kind=InitializerKind.TRUNCATED_NORMAL, std=0.1, seed=3), forget_bias=2.0)
    params = init_params(config)
    assert np.all(params["forward.b_f"] == 2.0)
    assert np.all(params["forward.b_i"] == 0.0)
    weights = np.concatenate([v.ravel() for k, v in params.items() if ".W_" in k])
    assert np.all(np.abs(weights) <= 0.2)


# --- training ---
def test_stateful_batches_are_contiguous_streams():
    config = _config(stateful=True, training=TrainConfig(batch_size=2))
    batches = stateful_batches(np.arange(41.0), config)
    assert len(batches) == 5
    (X0, y0), (X1, _) = batches[0], batches[1]
    assert X0[0].tolist() == [0.0, 1.0, 2.0, 3.0]
    assert X1[0].tolist() == [4.0, 5.0, 6.0, 7.0]
    assert X0[1].tolist() == [20.0, 21.0, 22.0, 23.0]
    assert y0.tolist() == [4.0, 24.0]

    with pytest.raises(ModelError):
        stateful_batches(np.arange(5.0), config)


def test_training_lowers_loss_and_is_deterministic():
    series = np.sin(np.arange(80) * 0.3) * 10.0 + 20.0
    config = _config(CellKind.LSTM)
    model, history = train(config, series)
    again, history_again = train(config, series)

    assert len(history) == 30
    assert history[-1] < history[0]
    assert history == history_again
    assert all(np.array_equal(model.params[k], again.params[k]) for k in model.params)
    assert model.mean == pytest.approx(series.mean())


def test_lstm_learns_a_sine():
    wave = np.sin(0.2 * np.arange(500))
    config = _config(
        window=8,
        hidden_size=16,
        initializer=Initializer(kind=InitializerKind.NORMAL, std=0.1, seed=3),
        training=TrainConfig(learning_rate=0.01, epochs=200, batch_size=32),
    )
    model, history = train(config, wave[:400])
    assert history[-1] < 0.05

    predicted = predict_series(model, wave[:400], 100, ForecastMode.ONE_STEP, observed=wave[400:])
    errors = model.standardize(predicted) - model.standardize(wave[400:])
    assert float(np.mean(errors**2)) < 0.1


@pytest.mark.parametrize("cell", [CellKind.SIMPLE, CellKind.GRU])
def test_stateful_training_runs(cell):
    series = np.cos(np.arange(120) * 0.2)
    config = _config(cell, stateful=True, training=TrainConfig(epochs=5, batch_size=4))
    _, history = train(config, series)
    assert all(math.isfinite(v) for v in history)


def test_training_divergence_is_reported():
    series = np.arange(30.0)
    series[10] = np.nan
    with pytest.raises(ModelError):
        train(_config(training=TrainConfig(epochs=1)), series)


def test_predict_series_modes_and_document():
    series = np.sin(np.arange(60) * 0.4)
    model, _ = train(_config(CellKind.GRU, training=TrainConfig(epochs=3)), series[:50])

    one_step = predict_series(model, series[:50], 10, ForecastMode.ONE_STEP, observed=series[50:])
    recursive = predict_series(model, series[:50], 10, ForecastMode.RECURSIVE)
    assert one_step.shape == recursive.shape == (10,)
    # The first prediction only sees history in both modes
    assert one_step[0] == pytest.approx(recursive[0])

    restored = rnn_from_document(rnn_to_document(model))
    assert np.array_equal(predict_series(restored, series[:50], 10, ForecastMode.RECURSIVE), recursive)

    with pytest.raises(DimensionError):
        predict_series(model, series[:50], 10, ForecastMode.ONE_STEP, observed=series[50:55])


def test_registered_activations_are_complete():
    assert {"sigmoid", "tanh", "relu", "softplus", "linear"} <= set(ACTIVATIONS)
