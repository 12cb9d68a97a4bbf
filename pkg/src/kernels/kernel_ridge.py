import itertools
import logging
from typing import List, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from src.core.errors import DimensionError, ModelError
from src.kernels.embedding import gram
from src.kernels.models import KernelKind, KernelSpec, KrrModel, KrrParams, Standardizer

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (1e-4, 1e-2, 1.0, 10.0)
DEFAULT_GAMMAS = (0.01, 0.1, 1.0, 10.0)
DEFAULT_DEGREES = (2, 3)


def default_kernels() -> List[KernelSpec]:
    kernels = [KernelSpec(kind=KernelKind.RBF, gamma=g) for g in DEFAULT_GAMMAS]
    kernels += [KernelSpec(kind=KernelKind.POLYNOMIAL, degree=d) for d in DEFAULT_DEGREES]
    kernels.append(KernelSpec(kind=KernelKind.LINEAR))
    return kernels


def default_krr_grid() -> List[KrrParams]:
    return [KrrParams(lam=lam, kernel=k) for k, lam in itertools.product(default_kernels(), DEFAULT_LAMBDAS)]


def prepare_inputs(X: np.ndarray, standardize: bool) -> tuple[np.ndarray, Optional[Standardizer]]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not standardize:
        return X, None
    scaler = Standardizer.fit(X)
    return scaler.apply(X), scaler


def model_inputs(X: np.ndarray, train_inputs: List[List[float]], standardizer: Optional[Standardizer]) -> np.ndarray:
    """New inputs mapped into the space the training inputs were stored in."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    dim = len(train_inputs[0])
    if X.shape[1] != dim:
        raise DimensionError(f"model expects inputs of dimension {dim}, got {X.shape[1]}")
    return standardizer.apply(X) if standardizer else X


def krr_fit(X: np.ndarray, y: np.ndarray, lam: float, kernel: KernelSpec, standardize: bool = True) -> KrrModel:
    """Solves (K + lam*I) alpha = y by Cholesky."""
    if lam < 0.0:
        raise ModelError(f"ridge strength must be >= 0, got {lam}")
    Z, scaler = prepare_inputs(X, standardize)
    y = np.asarray(y, dtype=float)
    if len(Z) != len(y):
        raise DimensionError(f"{len(Z)} inputs but {len(y)} targets")

    system = gram(kernel, Z, Z) + lam * np.eye(len(Z))
    try:
        alpha = cho_solve(cho_factor(system), y)
    except LinAlgError as e:
        raise ModelError(f"kernel system is singular for lambda={lam}") from e
    if not np.all(np.isfinite(alpha)):
        raise ModelError(f"kernel system is singular for lambda={lam}")

    logger.debug("KRR %s lambda=%g on %d points", kernel.label, lam, len(Z))
    return KrrModel(alpha=alpha.tolist(), lam=lam, kernel=kernel, train_inputs=Z.tolist(), standardizer=scaler)


def krr_predict(model: KrrModel, X: np.ndarray) -> np.ndarray:
    Z = model_inputs(X, model.train_inputs, model.standardizer)
    return gram(model.kernel, Z, np.asarray(model.train_inputs)) @ np.asarray(model.alpha)
