import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.errors import DimensionError
from src.kernels.embedding import embed, gram
from src.kernels.forecasting import forecast_recursive
from src.kernels.kernel_ridge import default_krr_grid, krr_fit, krr_predict
from src.kernels.models import EmbeddingSpec, KernelKind, KernelSpec, KrrModel, SvrModel
from src.kernels.svr import default_svr_grid, svr_dual_objective, svr_fit, svr_predict
from src.series_core.models import ForecastMode

RBF = KernelSpec(kind=KernelKind.RBF, gamma=1.0)
LINEAR = KernelSpec(kind=KernelKind.LINEAR)


# --- kernels and embedding ---
def test_kernel_values():
    assert gram(RBF, [[0.0]], [[1.0]])[0, 0] == pytest.approx(math.exp(-1.0))
    poly = KernelSpec(kind=KernelKind.POLYNOMIAL, degree=2)
    assert poly.coef0 == 1.0
    assert gram(poly, [[1.0, 2.0]], [[3.0, 4.0]])[0, 0] == pytest.approx(144.0)
    assert gram(LINEAR, [[1.0, 2.0]], [[3.0, 4.0]])[0, 0] == pytest.approx(11.0)


def test_kernel_spec_parameters_must_match_kind():
    with pytest.raises(ValidationError):
        KernelSpec(kind=KernelKind.RBF)
    with pytest.raises(ValidationError):
        KernelSpec(kind=KernelKind.LINEAR, gamma=0.5)
    with pytest.raises(ValidationError):
        KernelSpec(kind=KernelKind.RBF, gamma=0.5, degree=2)


def test_gram_dimension_mismatch():
    with pytest.raises(DimensionError):
        gram(RBF, [[0.0, 1.0]], [[1.0]])


def test_embed_pairs():
    X, y = embed(np.arange(1.0, 7.0), EmbeddingSpec(window=2))
    assert X.tolist() == [[1.0, 2.0], [2.0, 3.0], [3.0, 4.0], [4.0, 5.0]]
    assert y.tolist() == [3.0, 4.0, 5.0, 6.0]


def test_embed_time_index():
    X, _ = embed(np.arange(5.0), EmbeddingSpec(window=3, time_index=True, time_scale=10.0), start_index=20)
    assert X[:, -1].tolist() == pytest.approx([2.3, 2.4])


def test_embed_too_short():
    with pytest.raises(DimensionError):
        embed(np.arange(3.0), EmbeddingSpec(window=3))


def test_default_grids():
    assert len(default_krr_grid()) == 7 * 4
    assert len(default_svr_grid()) == 7 * 16


# --- kernel ridge ---
def test_krr_scalar_closed_form():
    model = krr_fit(np.array([[2.0]]), np.array([3.0]), lam=0.5, kernel=LINEAR, standardize=False)
    assert model.alpha[0] == pytest.approx(3.0 / 4.5)
    assert krr_predict(model, np.array([[1.0]]))[0] == pytest.approx(2.0 * 3.0 / 4.5)


def test_krr_interpolates_with_tiny_ridge():
    X = np.linspace(0.0, 9.0, 10)[:, None]
    y = np.sin(X[:, 0])
    model = krr_fit(X, y, lam=1e-8, kernel=RBF, standardize=False)
    assert np.allclose(krr_predict(model, X), y, atol=1e-4)


def test_krr_standardizer_is_stored():
    X = np.column_stack((np.arange(10.0) * 100.0, np.ones(10)))
    model = krr_fit(X, np.arange(10.0), lam=0.1, kernel=RBF)
    assert model.standardizer.scale[1] == 1.0
    assert np.allclose(np.asarray(model.train_inputs)[:, 0].mean(), 0.0)
    with pytest.raises(DimensionError):
        krr_predict(model, np.ones((1, 3)))


def test_krr_json_uses_lambda_key():
    model = krr_fit(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]), lam=0.1, kernel=LINEAR)
    document = model.model_dump(mode="json", by_alias=True)
    assert document["lambda"] == 0.1
    assert KrrModel.model_validate(document) == model


@pytest.mark.parametrize("n", [10, 50, 200])
def test_krr_solves_the_ridge_system(n):
    rng = np.random.default_rng(n)
    X = rng.normal(size=(n, 2))
    y = np.sin(X[:, 0]) + rng.normal(scale=0.1, size=n)
    model = krr_fit(X, y, lam=0.1, kernel=RBF, standardize=False)
    Z = np.asarray(model.train_inputs)
    residual = (gram(RBF, Z, Z) + 0.1 * np.eye(n)) @ np.asarray(model.alpha) - y
    assert np.linalg.norm(residual) < 1e-8 * np.linalg.norm(y)


# --- support vector regression ---
def _project(v: np.ndarray, z: np.ndarray, C: float) -> np.ndarray:
    # Projection onto {0 <= a <= C, z'a = 0}: bisection on the multiplier
    lo, hi = -np.abs(v).max() - C, np.abs(v).max() + C
    for _ in range(60):
        nu = 0.5 * (lo + hi)
        if np.dot(z, np.clip(v - nu * z, 0.0, C)) > 0.0:
            lo = nu
        else:
            hi = nu
    return np.clip(v - 0.5 * (lo + hi) * z, 0.0, C)


def _dual_oracle(K: np.ndarray, y: np.ndarray, C: float, epsilon: float) -> float:
    """Accelerated projected gradient on the 2n-variable dual."""
    n = len(y)
    z = np.concatenate((np.ones(n), -np.ones(n)))
    Q = np.outer(z, z) * np.block([[K, K], [K, K]])
    p = np.concatenate((epsilon - y, epsilon + y))
    step = 1.0 / np.linalg.eigvalsh(Q).max()
    a = previous = np.zeros(2 * n)
    t = 1.0
    for _ in range(5000):
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        v = a + (t - 1.0) / t_next * (a - previous)
        previous, a = a, _project(v - step * (Q @ v + p), z, C)
        t = t_next
    return float(-(0.5 * a @ Q @ a + p @ a))


def test_svr_constant_targets():
    X = np.arange(8.0)[:, None]
    model = svr_fit(X, np.full(8, 5.0), C=1.0, epsilon=0.1, kernel=RBF, standardize=False)
    assert model.converged
    assert np.allclose(model.beta, 0.0)
    assert model.b == pytest.approx(5.0)
    assert np.allclose(svr_predict(model, np.array([[100.0]])), 5.0)


def test_svr_matches_dual_oracle():
    rng = np.random.default_rng(8)
    x = np.linspace(0.0, 3.0, 15)
    y = np.sin(2.0 * x) + 0.1 * rng.normal(size=15)
    kernel = KernelSpec(kind=KernelKind.RBF, gamma=0.5)
    model = svr_fit(x[:, None], y, C=1.0, epsilon=0.1, kernel=kernel, tol=1e-8, standardize=False)

    oracle = _dual_oracle(gram(kernel, x[:, None], x[:, None]), y, C=1.0, epsilon=0.1)
    assert model.converged
    assert svr_dual_objective(model) == pytest.approx(oracle, abs=1e-4 * max(1.0, abs(oracle)))


def test_svr_solution_properties():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 2))
    y = X[:, 0] - 2.0 * X[:, 1] + 0.2 * rng.normal(size=30)
    model = svr_fit(X, y, C=10.0, epsilon=0.05, kernel=LINEAR, tol=1e-8)

    beta = np.asarray(model.beta)
    assert abs(beta.sum()) < 1e-8
    assert np.all(np.abs(beta) <= model.C + 1e-12)
    # Dual ascent never goes down
    assert np.all(np.diff(model.objective_history) >= -1e-10)
    residual = y - svr_predict(model, X)
    # Points strictly inside the tube carry no weight
    assert np.allclose(beta[np.abs(residual) < model.epsilon - 1e-3], 0.0, atol=1e-8)


def test_svr_stops_at_max_iter():
    X = np.linspace(0.0, 1.0, 20)[:, None]
    model = svr_fit(X, np.sin(6.0 * X[:, 0]), C=1.0, epsilon=0.01, kernel=RBF, max_iter=1)
    assert not model.converged
    assert model.iterations == 1


def test_svr_ignores_training_order():
    rng = np.random.default_rng(4)
    x = np.linspace(0.0, 3.0, 20)
    y = np.cos(2.0 * x) + 0.1 * rng.normal(size=20)
    kernel = KernelSpec(kind=KernelKind.RBF, gamma=0.5)
    order = rng.permutation(20)
    model = svr_fit(x[:, None], y, C=1.0, epsilon=0.05, kernel=kernel, tol=1e-8, standardize=False)
    shuffled = svr_fit(x[order, None], y[order], C=1.0, epsilon=0.05, kernel=kernel, tol=1e-8, standardize=False)

    grid = np.linspace(-0.5, 3.5, 9)[:, None]
    assert np.allclose(svr_predict(shuffled, grid), svr_predict(model, grid), atol=1e-4)
    assert svr_dual_objective(shuffled) == pytest.approx(svr_dual_objective(model), abs=1e-6)


def test_hard_svr_without_tube_interpolates_like_krr():
    X = np.linspace(0.0, 9.0, 10)[:, None]
    y = np.sin(X[:, 0])
    svr = svr_fit(X, y, C=1e4, epsilon=0.0, kernel=RBF, tol=1e-8, standardize=False)
    krr = krr_fit(X, y, lam=1e-10, kernel=RBF, standardize=False)
    assert svr.converged
    assert np.allclose(svr_predict(svr, X), krr_predict(krr, X), atol=1e-3)


def test_svr_model_rejects_unbalanced_duals():
    with pytest.raises(ValidationError):
        SvrModel(
            beta=[0.5, 0.2],
            b=0.0,
            C=1.0,
            epsilon=0.1,
            kernel=LINEAR,
            train_inputs=[[0.0], [1.0]],
            train_targets=[0.0, 1.0],
            xi=[0.0, 0.0],
            xi_star=[0.0, 0.0],
        )


# --- forecasting ---
def test_recursive_and_one_step_modes():
    double_last = lambda X: 2.0 * np.asarray(X)[:, -1]
    spec = EmbeddingSpec(window=1)

    recursive = forecast_recursive(double_last, [1.0], 3, spec)
    assert recursive.tolist() == [2.0, 4.0, 8.0]

    one_step = forecast_recursive(double_last, [1.0], 3, spec, mode=ForecastMode.ONE_STEP, observed=[5.0, 6.0, 7.0])
    assert one_step.tolist() == [2.0, 10.0, 12.0]

    with pytest.raises(DimensionError):
        forecast_recursive(double_last, [1.0], 3, spec, mode=ForecastMode.ONE_STEP, observed=[5.0])


def test_forecast_time_feature_continues_index():
    time_of = lambda X: np.asarray(X)[:, -1]
    spec = EmbeddingSpec(window=2, time_index=True)
    out = forecast_recursive(time_of, [0.0, 0.0, 0.0], 2, spec, start_index=10)
    assert out.tolist() == [13.0, 14.0]
