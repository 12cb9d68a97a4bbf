"""
One adapter per model family: build the candidate list from the config,
then fit a candidate on a training prefix and predict the points after it.
Predictions come back in original units through the transform chain.
"""
import itertools
import logging
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError

from src.arima.estimation import fit as arima_fit
from src.arima.estimation import fitted_values as arima_fitted_values
from src.arima.estimation import forecast as arima_forecast
from src.arima.models import ArimaSpec
from src.arima.selection import arima_grid, auto_arima
from src.core.errors import ConfigError
from src.deep.models import CellKind, Initializer, RnnConfig, TrainConfig
from src.deep.training import predict_series, rnn_to_document, train
from src.kernels.embedding import embed
from src.kernels.forecasting import as_predictor, forecast_recursive
from src.kernels.kernel_ridge import default_krr_grid, krr_fit
from src.kernels.models import EmbeddingSpec, KernelKind, KernelSpec, KrrParams, SvrParams
from src.kernels.svr import default_svr_grid, svr_fit
from src.pipeline.chain import TransformChain, steps_from_config
from src.pipeline.config import ARIMA_FAMILIES, KERNEL_FAMILIES, Family, ModelSection, PipelineConfig
from src.series_core.models import ForecastMode, TimeSeries

logger = logging.getLogger(__name__)


class AutoArimaSearch(BaseModel):
    """AIC search over an order grid, run on each training prefix."""
    model_config = ConfigDict(frozen=True)

    max_p: int
    max_q: int
    max_P: int
    max_Q: int
    d_range: List[int]
    D_range: List[int]
    m: int
    with_intercept: bool
    n_jobs: int = 1

    @property
    def label(self) -> str:
        return f"auto_arima(p<={self.max_p}, q<={self.max_q}, P<={self.max_P}, Q<={self.max_Q}, d in {self.d_range}, D in {self.D_range}, m={self.m})"


class KernelCandidate(BaseModel):
    model_config = ConfigDict(frozen=True)

    hyper: Union[KrrParams, SvrParams]
    embedding: EmbeddingSpec
    standardize: bool = True
    tol: float = 1e-3
    max_iter: int = 100_000

    @property
    def label(self) -> str:
        return f"{self.hyper.label}, window={self.embedding.window}"


Candidate = Union[ArimaSpec, AutoArimaSearch, KernelCandidate, RnnConfig]


class Prediction(BaseModel):
    """Family output for one training prefix, already in original units."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    label: str
    fitted: pd.Series
    predicted: pd.Series
    mode: ForecastMode
    document: dict
    loss_history: Optional[List[float]] = None


# --- candidate lists ---
def _kernel_specs(section: ModelSection) -> List[KernelSpec]:
    kernels: List[KernelSpec] = []
    for kind in section.kernel:
        if kind == KernelKind.RBF:
            kernels += [KernelSpec(kind=kind, gamma=g) for g in section.gamma]
        elif kind == KernelKind.POLYNOMIAL:
            kernels += [KernelSpec(kind=kind, degree=d, coef0=section.coef0) for d in section.degree]
        else:
            kernels.append(KernelSpec(kind=kind))
    return kernels


def _kernel_candidates(section: ModelSection) -> List[KernelCandidate]:
    if section.family == Family.KRR:
        hypers = default_krr_grid() if section.use_default_grid else [
            KrrParams(lam=lam, kernel=k) for k, lam in itertools.product(_kernel_specs(section), section.lam)
        ]
    else:
        hypers = default_svr_grid() if section.use_default_grid else [
            SvrParams(C=C, epsilon=eps, kernel=k) for k, C, eps in itertools.product(_kernel_specs(section), section.C, section.epsilon)
        ]
    return [
        KernelCandidate(
            hyper=h,
            embedding=EmbeddingSpec(window=w, time_index=section.time_index),
            standardize=section.standardize,
            tol=section.tol,
            max_iter=section.max_iter,
        )
        for w, h in itertools.product(section.window, hypers)
    ]


def _rnn_candidates(section: ModelSection, seed: int) -> List[RnnConfig]:
    cell = {Family.RNN: CellKind.SIMPLE, Family.LSTM: CellKind.LSTM, Family.BILSTM: CellKind.LSTM, Family.GRU: CellKind.GRU}[section.family]
    initializer = Initializer(
        kind=section.initializer,
        low=section.init_low,
        high=section.init_high,
        mean=section.init_mean,
        std=section.init_std,
        seed=seed,
    )
    configs = []
    grid = itertools.product(section.window, section.hidden_size, section.activation, section.learning_rate, section.epochs, section.batch_size)
    for window, hidden, activation, lr, epochs, batch in grid:
        configs.append(
            RnnConfig(
                cell=cell,
                bidirectional=section.family == Family.BILSTM,
                stateful=section.stateful,
                window=window,
                hidden_size=hidden,
                activation=activation,
                forget_bias=section.forget_bias,
                initializer=initializer,
                training=TrainConfig(learning_rate=lr, epochs=epochs, batch_size=batch),
            )
        )
    return configs


def build_candidates(config: PipelineConfig, for_cv: bool = False) -> List[Candidate]:
    """
    Every hyperparameter combination the [model] section spells out.
    auto_arima runs its own AIC search, unless cross-validation is asked
    to rank the order grid directly.
    """
    section = config.model
    try:
        if section.family == Family.ARIMA:
            specs = []
            for p, d, q, P, D, Q in itertools.product(section.p, section.d, section.q, section.P, section.D, section.Q):
                try:
                    specs.append(ArimaSpec(p=p, d=d, q=q, P=P, D=D, Q=Q, m=section.m, with_intercept=section.with_intercept))
                except ValidationError as ve:
                    logger.warning("Skipping order (%d,%d,%d)(%d,%d,%d): %s", p, d, q, P, D, Q, ve.errors()[0]["msg"])
            candidates: List[Candidate] = specs
        elif section.family == Family.AUTO_ARIMA:
            if for_cv:
                candidates = arima_grid(section.max_p, section.max_q, section.max_P, section.max_Q, section.d_range, section.D_range, section.m, section.with_intercept)
            else:
                candidates = [
                    AutoArimaSearch(
                        max_p=section.max_p,
                        max_q=section.max_q,
                        max_P=section.max_P,
                        max_Q=section.max_Q,
                        d_range=section.d_range,
                        D_range=section.D_range,
                        m=section.m,
                        with_intercept=section.with_intercept,
                        n_jobs=section.n_jobs,
                    )
                ]
        elif section.family in KERNEL_FAMILIES:
            candidates = _kernel_candidates(section)
        else:
            candidates = _rnn_candidates(section, config.run.seed)
    except ValidationError as ve:
        raise ConfigError(f"[model]: {ve.errors()[0]['msg']}") from ve
    if not candidates:
        raise ConfigError("[model] section yields no valid candidate")
    return candidates


# --- fit / predict ---
def _series_at(values: np.ndarray, start: int) -> pd.Series:
    return pd.Series(np.asarray(values, dtype=float), index=pd.RangeIndex(start, start + len(values)))


def _fit_arima(candidate, train_ts: TimeSeries, horizon: int):
    if isinstance(candidate, AutoArimaSearch):
        fitted = auto_arima(
            train_ts,
            candidate.max_p,
            candidate.max_q,
            candidate.max_P,
            candidate.max_Q,
            candidate.d_range,
            candidate.D_range,
            candidate.m,
            candidate.with_intercept,
            n_jobs=candidate.n_jobs,
        )
    else:
        fitted = arima_fit(candidate, train_ts)
    in_sample = arima_fitted_values(fitted)
    return fitted, in_sample.array, arima_forecast(fitted, horizon).values


def fit_predict(config: PipelineConfig, candidate: Candidate, series: TimeSeries, n_train: int) -> Prediction:
    """
    Fits the transform chain and `candidate` on series[:n_train] and
    predicts positions n_train .. len(series)-1. One-step predictions read
    the observed values of those positions for their lags; ARIMA is always
    recursive.
    """
    chain = TransformChain(steps_from_config(config.transforms))
    stage = chain.fit_apply(series, n_train)
    train_part = stage[stage.index < n_train]
    observed = stage[stage.index >= n_train].to_numpy()
    first = int(train_part.index[0])
    horizon = len(series) - n_train
    train_ts = series.with_values(train_part.to_numpy(), offset=first)
    mode = config.model.forecast_mode
    loss_history = None

    if config.model.family in ARIMA_FAMILIES:
        mode = ForecastMode.RECURSIVE
        fitted, in_sample, future = _fit_arima(candidate, train_ts, horizon)
        label = fitted.spec.label
        fitted_start = first + len(train_part) - len(in_sample)
        document = fitted.model_dump(mode="json")
    elif isinstance(candidate, KernelCandidate):
        X, y = embed(train_part.to_numpy(), candidate.embedding, start_index=first)
        hyper = candidate.hyper
        if isinstance(hyper, KrrParams):
            model = krr_fit(X, y, hyper.lam, hyper.kernel, standardize=candidate.standardize)
        else:
            model = svr_fit(X, y, hyper.C, hyper.epsilon, hyper.kernel, tol=candidate.tol, max_iter=candidate.max_iter, standardize=candidate.standardize)
        in_sample = as_predictor(model)(X)
        future = forecast_recursive(model, train_part.to_numpy(), horizon, candidate.embedding, mode=mode, observed=observed, start_index=first)
        label = candidate.label
        fitted_start = first + candidate.embedding.window
        document = {"candidate": candidate.model_dump(mode="json"), "model": model.model_dump(mode="json", by_alias=True)}
    else:
        model, loss_history = train(candidate, train_part.to_numpy())
        w = candidate.window
        values = train_part.to_numpy()
        in_sample = predict_series(model, values[:w], len(values) - w, ForecastMode.ONE_STEP, observed=values[w:])
        future = predict_series(model, values, horizon, mode, observed=observed)
        label = candidate.label
        fitted_start = first + w
        document = rnn_to_document(model)

    return Prediction(
        label=label,
        fitted=chain.restore(_series_at(in_sample, fitted_start), ForecastMode.ONE_STEP),
        predicted=chain.restore(_series_at(future, n_train), mode),
        mode=mode,
        document=document,
        loss_history=loss_history,
    )
