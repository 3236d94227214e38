"""Ranking metrics over scored candidate groups."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qmwf.errors import DegenerateInputError, DimensionError


@dataclass(frozen=True)
class RankedCandidates:
    """
    Scored candidates of one question.

    ``order`` lists candidate indices by descending score; equal scores keep
    their input order, so rankings are reproducible bit for bit.
    """

    question_id: str
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if scores.size == 0:
            raise DimensionError(f"question {self.question_id} has no candidates")
        if scores.shape != labels.shape:
            raise DimensionError(f"{scores.size} scores for {labels.size} labels in question {self.question_id}")
        if not np.all(np.isfinite(scores)):
            raise DimensionError(f"non-finite score in question {self.question_id}")
        if not np.all((labels == 0) | (labels == 1)):
            raise DimensionError(f"labels must be 0 or 1 in question {self.question_id}")
        if not labels.any():
            raise DegenerateInputError(f"question {self.question_id} has no correct candidate")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    @property
    def order(self) -> np.ndarray:
        return np.argsort(-self.scores, kind="stable")

    @property
    def ranked_labels(self) -> np.ndarray:
        """Labels in rank order."""
        return self.labels[self.order]

    @property
    def first_positive_rank(self) -> int:
        """1-based rank of the best-ranked correct candidate."""
        return int(np.argmax(self.ranked_labels)) + 1


def average_precision(r: RankedCandidates) -> float:
    """Mean over correct candidates of the precision at their rank."""
    ranked = r.ranked_labels
    hits = np.cumsum(ranked)
    ranks = np.arange(1, ranked.size + 1)
    return float(np.sum((hits / ranks)[ranked == 1]) / hits[-1])


def reciprocal_rank(r: RankedCandidates) -> float:
    return 1.0 / r.first_positive_rank


def _mean(values: list[float]) -> float:
    if not values:
        raise DimensionError("metrics need at least one question group")
    return float(np.mean(np.array(values, dtype=np.float64)))


def mean_average_precision(groups: Sequence[RankedCandidates]) -> float:
    return _mean([average_precision(g) for g in groups])


def mean_reciprocal_rank(groups: Sequence[RankedCandidates]) -> float:
    return _mean([reciprocal_rank(g) for g in groups])


def p_at_1(groups: Sequence[RankedCandidates]) -> float:
    """Fraction of groups whose top-scored candidate is correct."""
    return _mean([float(g.ranked_labels[0]) for g in groups])


def summarize(groups: Sequence[RankedCandidates]) -> dict[str, float]:
    """MAP, MRR and P@1 of a list of groups."""
    return {
        "map": mean_average_precision(groups),
        "mrr": mean_reciprocal_rank(groups),
        "p@1": p_at_1(groups),
    }
