import itertools
import logging
from typing import List

import numpy as np

from src.core.errors import DimensionError, ModelError
from src.kernels.embedding import gram
from src.kernels.kernel_ridge import default_kernels, model_inputs, prepare_inputs
from src.kernels.models import KernelSpec, SvrModel, SvrParams

logger = logging.getLogger(__name__)

DEFAULT_CS = (0.1, 1.0, 10.0, 100.0)
DEFAULT_EPSILONS = (0.01, 0.05, 0.1, 0.5)
DEFAULT_MAX_ITER = 100_000
# Floor for a non-positive curvature along the pair direction
TAU = 1e-12


def default_svr_grid() -> List[SvrParams]:
    return [
        SvrParams(C=C, epsilon=eps, kernel=k)
        for k, C, eps in itertools.product(default_kernels(), DEFAULT_CS, DEFAULT_EPSILONS)
    ]


def _violating_pair(a: np.ndarray, G: np.ndarray, z: np.ndarray, C: float):
    """Maximal violating pair (i in I_up, j in I_low) and the gap m - M."""
    score = -z * G
    up = ((z > 0) & (a < C)) | ((z < 0) & (a > 0))
    low = ((z > 0) & (a > 0)) | ((z < 0) & (a < C))
    if not up.any() or not low.any():
        return -1, -1, 0.0, score, up, low
    i = int(np.flatnonzero(up)[np.argmax(score[up])])
    j = int(np.flatnonzero(low)[np.argmin(score[low])])
    return i, j, float(score[i] - score[j]), score, up, low


def _pair_update(a: np.ndarray, G: np.ndarray, Q: np.ndarray, z: np.ndarray, i: int, j: int, C: float) -> None:
    """Closed-form two-variable step with clipping to the box, in place."""
    ai, aj = a[i], a[j]
    if z[i] != z[j]:
        quad = max(Q[i, i] + Q[j, j] + 2.0 * Q[i, j], TAU)
        delta = (-G[i] - G[j]) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj, ai = 0.0, diff
        elif ai < 0:
            ai, aj = 0.0, -diff
        if diff > 0:
            if ai > C:
                ai, aj = C, C - diff
        elif aj > C:
            aj, ai = C, C + diff
    else:
        quad = max(Q[i, i] + Q[j, j] - 2.0 * Q[i, j], TAU)
        delta = (G[i] - G[j]) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > C:
            if ai > C:
                ai, aj = C, total - C
        elif aj < 0:
            aj, ai = 0.0, total
        if total > C:
            if aj > C:
                aj, ai = C, total - C
        elif ai < 0:
            ai, aj = 0.0, total

    G += Q[:, i] * (ai - a[i]) + Q[:, j] * (aj - a[j])
    a[i], a[j] = ai, aj


def _bias(a: np.ndarray, score: np.ndarray, C: float, m: float, M: float) -> float:
    free = (a > 0) & (a < C)
    if free.any():
        return float(score[free].mean())
    return (m + M) / 2.0


def _dual_objective(a: np.ndarray, G: np.ndarray, p: np.ndarray) -> float:
    # -(1/2 a'Qa + p'a) with Qa = G - p
    return float(-0.5 * np.dot(a, G + p))


def svr_fit(
    X: np.ndarray,
    y: np.ndarray,
    C: float,
    epsilon: float,
    kernel: KernelSpec,
    tol: float = 1e-3,
    max_iter: int = DEFAULT_MAX_ITER,
    standardize: bool = True,
) -> SvrModel:
    """
    epsilon-insensitive SVR dual solved by SMO over 2n variables
    a = [alpha, alpha*] with signs z = [+1, -1]:

        min 1/2 a'Qa + p'a   s.t. 0 <= a <= C, z'a = 0,

    Q = zz' * [[K, K], [K, K]] and p = [eps - y, eps + y]. Stops when the
    maximal KKT violation m - M drops below `tol`.
    """
    if C <= 0.0 or epsilon < 0.0:
        raise ModelError(f"SVR needs C > 0 and epsilon >= 0, got C={C}, epsilon={epsilon}")
    Z, scaler = prepare_inputs(X, standardize)
    y = np.asarray(y, dtype=float)
    n = len(Z)
    if n != len(y):
        raise DimensionError(f"{n} inputs but {len(y)} targets")

    K = gram(kernel, Z, Z)
    z = np.concatenate((np.ones(n), -np.ones(n)))
    Q = np.outer(z, z) * np.block([[K, K], [K, K]])
    p = np.concatenate((epsilon - y, epsilon + y))
    a = np.zeros(2 * n)
    G = p.copy()

    history: List[float] = []
    converged = False
    iterations = 0
    while True:
        i, j, gap, score, up, low = _violating_pair(a, G, z, C)
        if i < 0 or gap < tol:
            converged = True
            break
        if iterations >= max_iter:
            break
        _pair_update(a, G, Q, z, i, j, C)
        history.append(_dual_objective(a, G, p))
        iterations += 1

    if not converged:
        logger.warning("SVR did not reach tol=%g within %d iterations (gap %.3g)", tol, max_iter, gap)
    else:
        logger.debug("SVR converged after %d iterations", iterations)

    m = float(score[up].max()) if up.any() else 0.0
    M = float(score[low].min()) if low.any() else 0.0
    b = _bias(a, score, C, m, M)
    beta = a[:n] - a[n:]
    fitted = K @ beta + b
    return SvrModel(
        beta=beta.tolist(),
        b=b,
        C=C,
        epsilon=epsilon,
        kernel=kernel,
        train_inputs=Z.tolist(),
        train_targets=y.tolist(),
        standardizer=scaler,
        xi=np.maximum(0.0, y - fitted - epsilon).tolist(),
        xi_star=np.maximum(0.0, fitted - y - epsilon).tolist(),
        converged=converged,
        iterations=iterations,
        objective_history=history,
    )


def svr_predict(model: SvrModel, X: np.ndarray) -> np.ndarray:
    Z = model_inputs(X, model.train_inputs, model.standardizer)
    return gram(model.kernel, Z, np.asarray(model.train_inputs)) @ np.asarray(model.beta) + model.b


def svr_dual_objective(model: SvrModel) -> float:
    """y'beta - eps*sum|beta| - 1/2 beta'K beta, the dual value at the stored solution."""
    beta = np.asarray(model.beta)
    Z = np.asarray(model.train_inputs)
    K = gram(model.kernel, Z, Z)
    return float(np.dot(model.train_targets, beta) - model.epsilon * np.abs(beta).sum() - 0.5 * beta @ K @ beta)
