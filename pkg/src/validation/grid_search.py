import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from src.core.errors import ModelError, ToolkitError
from src.series_core.models import TimeSeries
from src.validation.models import CandidateScore, CvSpec, Fold, GridSearchResult
from src.validation.splits import expanding_splits

logger = logging.getLogger(__name__)

Candidate = TypeVar("Candidate")


class _Failed:
    def __init__(self, message: str):
        self.message = message


def _label(candidate) -> str:
    return getattr(candidate, "label", None) or str(candidate)


def grid_search(
    candidates: Sequence[Candidate],
    evaluate: Callable[[Candidate, Fold], float],
    cv: CvSpec,
    series: TimeSeries,
    n_jobs: int = 1,
) -> GridSearchResult:
    """
    Scores every candidate on every expanding-window fold and keeps the
    lowest mean. Ties go to the earlier candidate. A candidate whose
    evaluation raises, or returns a non-finite score, on any fold is
    excluded and reported.
    """
    if not candidates:
        raise ModelError("grid search needs at least one candidate")
    folds = expanding_splits(len(series), cv)

    def run(job):
        candidate, fold = job
        try:
            score = float(evaluate(candidate, fold))
        except (ToolkitError, ValueError, ArithmeticError) as e:
            return _Failed(f"fold {fold.index}: {e}")
        if not math.isfinite(score):
            return _Failed(f"fold {fold.index}: non-finite score {score}")
        return score

    jobs = [(c, f) for c in candidates for f in folds]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]

    scores: List[CandidateScore] = []
    for k, candidate in enumerate(candidates):
        row = outcomes[k * len(folds):(k + 1) * len(folds)]
        failures = [o.message for o in row if isinstance(o, _Failed)]
        entry = CandidateScore(index=k, label=_label(candidate))
        if failures:
            entry.error = failures[0]
            logger.warning("Excluding %s: %s", entry.label, entry.error)
        else:
            entry.fold_scores = list(row)
            entry.mean = sum(row) / len(row)
        scores.append(entry)

    ranked = [s for s in scores if not s.failed]
    if not ranked:
        raise ModelError(f"all {len(candidates)} candidates failed during cross-validation")
    winner = min(ranked, key=lambda s: (s.mean, s.index))
    logger.info("Grid search winner: %s (mean score %.6g over %d folds)", winner.label, winner.mean, len(folds))
    return GridSearchResult(best=candidates[winner.index], best_index=winner.index, folds=folds, scores=scores)
