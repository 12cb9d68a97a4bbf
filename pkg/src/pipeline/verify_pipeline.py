from datetime import date

import numpy as np
import pytest
from scipy.signal import lfilter

from src.core.errors import ConfigError
from src.deep.models import CellKind
from src.kernels.models import KernelKind
from src.pipeline.chain import TransformChain, steps_from_config
from src.pipeline.config import Family, PipelineConfig, TransformsSection, load_config
from src.pipeline.families import AutoArimaSearch, KernelCandidate, build_candidates, fit_predict
from src.series_core.models import ForecastMode, TimeSeries, TransformKind


def _series(values) -> TimeSeries:
    return TimeSeries.from_array(values, start=date(1930, 1, 1), step_months=12)


def _config(model: dict, transforms: dict = None, **sections) -> PipelineConfig:
    return PipelineConfig.model_validate({"model": model, "transforms": transforms or {}, **sections})


def _write(tmp_path, text: str) -> str:
    path = tmp_path / "pipeline.ini"
    path.write_text(text)
    return str(path)


# --- config ---
def test_load_config_parses_grids(tmp_path):
    path = _write(
        tmp_path,
        """
[series]
source = events
step_months = 6
origin = 1930-01-01

[transforms]
chain = arcsin_minmax, ewma
ewma_alpha = 0.5

[model]
family = krr
kernel = rbf, linear
gamma = 0.1, 1
lambda = 0.01, 0.1
window = 3

[cv]
n_splits = 4

[run]
test_fraction = 0.25
seed = 7
""",
    )
    config = load_config(path)
    assert config.series.step_months == 6
    assert config.series.origin == date(1930, 1, 1)
    assert config.transforms.chain == [TransformKind.ARCSIN_MINMAX, TransformKind.EWMA]
    assert config.model.kernel == [KernelKind.RBF, KernelKind.LINEAR]
    assert config.model.lam == [0.01, 0.1]
    assert config.model.window == [3]
    assert config.cv.n_splits == 4
    assert config.with_seed(11).run.seed == 11
    assert config.with_seed(None).run.seed == 7


def test_seasonal_keys_are_case_sensitive(tmp_path):
    path = _write(tmp_path, "[model]\nfamily = arima\np = 1\nP = 0, 1\nm = 4\n")
    config = load_config(path)
    assert config.model.p == [1]
    assert config.model.P == [0, 1]


def test_seasonal_period_defaults_to_steps_per_year(tmp_path):
    config = load_config(_write(tmp_path, "[series]\nstep_months = 6\n\n[model]\nfamily = arima\np = 1\nP = 1\n"))
    assert config.model.m == 2
    assert config.transforms.seasonal_lag == 2
    specs = build_candidates(config)
    assert [(s.p, s.P, s.m) for s in specs] == [(1, 1, 2)]

    quarterly = _config({"family": "arima"}, series={"step_months": 3})
    assert quarterly.model.m == 4 and quarterly.transforms.seasonal_lag == 4
    assert _config({"family": "arima"}).model.m == 1

    explicit = _config({"family": "arima", "m": 12}, {"seasonal_lag": 3}, series={"step_months": 1})
    assert explicit.model.m == 12 and explicit.transforms.seasonal_lag == 3


@pytest.mark.parametrize(
    "text",
    [
        "[series]\nstep_months = 12\n",
        "[model]\nfamily = prophet\n",
        "[model]\nfamily = arima\n[plots]\ncolor = red\n",
        "[model]\nfamily = arima\nunknown_key = 1\n",
        "[model]\nfamily = arima\n[transforms]\nchain = difference\n",
        "[model]\nfamily = krr\n[transforms]\nchain = log, log\n",
        "[model]\nfamily = lstm\n[run]\ntest_fraction = 1.5\n",
    ],
)
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, text))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.ini"))


# --- transform chain ---
def test_chain_restores_observed_values_one_step():
    values = np.array([3.0, 5.0, 4.0, 9.0, 12.0, 10.0, 15.0, 18.0])
    chain = TransformChain(steps_from_config(TransformsSection(chain=["log", "difference"])))
    stage = chain.fit_apply(_series(values), n_train=6)
    assert chain.offset == 1
    assert list(stage.index) == list(range(1, 8))

    restored = chain.restore(stage[stage.index >= 6], ForecastMode.ONE_STEP)
    assert restored.to_numpy() == pytest.approx(values[6:])


def test_chain_restores_recursively_from_training_tail():
    values = np.array([1.0, 2.0, 4.0, 7.0, 11.0, 16.0, 22.0, 29.0])
    chain = TransformChain(steps_from_config(TransformsSection(chain=["difference"], difference_order=2)))
    stage = chain.fit_apply(_series(values), n_train=5)
    assert chain.offset == 2
    restored = chain.restore(stage[stage.index >= 5], ForecastMode.RECURSIVE)
    assert restored.to_numpy() == pytest.approx(values[5:])


def test_chain_arcsin_is_fitted_on_training_prefix():
    values = np.array([0.0, 10.0, 5.0, 20.0])
    chain = TransformChain(steps_from_config(TransformsSection(chain=["arcsin_minmax"])))
    stage = chain.fit_apply(_series(values), n_train=3)
    # 20 lies above the training maximum and is clipped
    assert stage.iloc[-1] == pytest.approx(np.pi / 2)
    assert chain.restore(stage.iloc[:3], ForecastMode.ONE_STEP).to_numpy() == pytest.approx(values[:3])


# --- candidates ---
def test_candidates_per_family():
    arima = build_candidates(_config({"family": "arima", "p": "0, 1", "q": "0, 1", "with_intercept": False}))
    # (0,0,0) without intercept estimates nothing
    assert len(arima) == 3

    auto = build_candidates(_config({"family": "auto_arima", "max_p": 1, "max_q": 1, "d_range": "0"}))
    assert len(auto) == 1 and isinstance(auto[0], AutoArimaSearch)
    assert len(build_candidates(_config({"family": "auto_arima", "max_p": 1, "max_q": 1, "d_range": "0"}), for_cv=True)) == 4

    krr = build_candidates(
        _config({"family": "krr", "kernel": "rbf, linear", "gamma": "0.1, 1", "lambda": "0.01, 0.1", "window": "2, 3"})
    )
    assert len(krr) == 3 * 2 * 2
    assert all(isinstance(c, KernelCandidate) for c in krr)

    svr = build_candidates(_config({"family": "svr", "use_default_grid": True, "window": "4"}))
    assert len(svr) == 7 * 16

    bilstm = build_candidates(_config({"family": "bilstm", "hidden_size": "4, 8"}, run={"seed": 5}))
    assert [c.hidden_size for c in bilstm] == [4, 8]
    assert all(c.cell == CellKind.LSTM and c.bidirectional and c.initializer.seed == 5 for c in bilstm)


def test_invalid_candidate_settings():
    with pytest.raises(ConfigError):
        build_candidates(_config({"family": "arima", "p": "0", "q": "0", "with_intercept": False}))
    with pytest.raises(ConfigError):
        build_candidates(_config({"family": "lstm", "stateful": True, "epochs": "0"}))


# --- fit / predict ---
def _ar1_series(n=60, seed=0) -> TimeSeries:
    noise = np.random.default_rng(seed).normal(size=n)
    return _series(50.0 + lfilter([1.0], [1.0, -0.6], noise))


def test_fit_predict_arima_is_recursive():
    config = _config({"family": "arima", "p": "1", "forecast_mode": "one_step"})
    series = _ar1_series()
    prediction = fit_predict(config, build_candidates(config)[0], series, n_train=48)
    assert prediction.mode == ForecastMode.RECURSIVE
    assert list(prediction.predicted.index) == list(range(48, 60))
    assert list(prediction.fitted.index) == list(range(0, 48))
    assert prediction.label == "ARIMA(1,0,0)"
    assert prediction.document["spec"]["p"] == 1


@pytest.mark.parametrize("mode", ["one_step", "recursive"])
def test_fit_predict_kernels_through_arcsin_and_difference(mode):
    config = _config(
        {"family": "krr", "kernel": "rbf", "gamma": "0.5", "lambda": "0.1", "window": "3", "forecast_mode": mode},
        {"chain": "arcsin_minmax, difference"},
    )
    series = _ar1_series(seed=3)
    prediction = fit_predict(config, build_candidates(config)[0], series, n_train=45)
    assert list(prediction.predicted.index) == list(range(45, 60))
    # Differencing drops one point, the window three more
    assert list(prediction.fitted.index) == list(range(4, 45))
    assert np.all(np.isfinite(prediction.predicted.to_numpy()))
    # Predictions are back in original units
    assert abs(prediction.predicted.mean() - series.array.mean()) < 10.0


def test_fit_predict_rnn_reports_losses():
    config = _config({"family": "gru", "window": "4", "hidden_size": "3", "epochs": "3", "batch_size": "8"})
    series = _ar1_series(seed=5)
    prediction = fit_predict(config, build_candidates(config)[0], series, n_train=48)
    assert len(prediction.loss_history) == 3
    assert list(prediction.fitted.index) == list(range(4, 48))
    assert len(prediction.predicted) == 12
    assert "params" in prediction.document
