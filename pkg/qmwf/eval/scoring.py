"""Scoring question/answer pairs and whole splits with a model."""

import logging

from qmwf import diagnostics
from qmwf.data.schemas import Dataset
from qmwf.embedding.encoder import SentenceEncoder
from qmwf.eval.metrics import RankedCandidates
from qmwf.network.layers import forward, match_score
from qmwf.network.model import QmwfModel, Representation

logger = logging.getLogger(__name__)


def represent(model: QmwfModel, encoder: SentenceEncoder, text: str) -> Representation:
    """Length-R representation of a text."""
    return forward(encoder.encode(text).rows, model)


def score_pair(model: QmwfModel, encoder: SentenceEncoder, question: str, answer: str) -> float:
    """
    Matching score of an answer for a question.

    Both texts pass through the same encoder and network; the score is the
    inner product of their representations.
    """
    return match_score(represent(model, encoder, question), represent(model, encoder, answer))


def score_dataset(model: QmwfModel, encoder: SentenceEncoder, dataset: Dataset) -> list[RankedCandidates]:
    """
    Score every candidate of every question.

    Groups without a correct candidate cannot be ranked and are skipped
    with a diagnostic.
    """
    ranked: list[RankedCandidates] = []
    skipped = 0
    for group in dataset:
        if not group.positives:
            skipped += 1
            continue
        q = represent(model, encoder, group.question_text)
        scores = [match_score(q, represent(model, encoder, p.answer_text)) for p in group.pairs]
        ranked.append(RankedCandidates(group.question_id, scores, group.labels))
    diagnostics.emit("score_dataset", "unrankable_groups", skipped, path=dataset.split, warn=True)
    logger.debug("Scored %d groups of %s", len(ranked), dataset.split)
    return ranked
