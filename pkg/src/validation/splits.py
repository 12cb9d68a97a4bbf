import logging
from typing import List

from src.core.errors import ConfigError
from src.validation.models import CvSpec, Fold

logger = logging.getLogger(__name__)


def expanding_splits(n: int, spec: CvSpec) -> List[Fold]:
    """
    Expanding-window folds: with s = n // (n_splits + 1), fold i trains on
    [0, i*s) and tests on [i*s + gap, i*s + gap + s). A fold whose test
    range would run past n is dropped, so every test has exactly s points.
    """
    size = n // (spec.n_splits + 1)
    if size < 1:
        raise ConfigError(f"{spec.n_splits} splits do not fit a series of length {n}")
    if n - spec.gap < 2 * size:
        raise ConfigError(f"gap {spec.gap} leaves no room for a test fold in {n} points")

    folds = []
    for i in range(1, spec.n_splits + 1):
        start = i * size + spec.gap
        if start + size > n:
            logger.debug("Dropping fold %d: test [%d, %d) passes the end (%d)", i, start, start + size, n)
            continue
        folds.append(Fold(index=i, train_end=i * size, test_start=start, test_end=start + size))
    if not folds:
        raise ConfigError(f"no feasible fold for n={n}, n_splits={spec.n_splits}, gap={spec.gap}")
    return folds
