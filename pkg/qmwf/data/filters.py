"""Dataset filters and negative sampling."""

import logging

import numpy as np

from qmwf import diagnostics
from qmwf.data.schemas import Dataset, QAPair, QuestionGroup
from qmwf.embedding.vocab import tokenize
from qmwf.errors import DataLoadError
from qmwf.rng import SAMPLING, substream

logger = logging.getLogger(__name__)

# Draws per group before rejection sampling gives way to an explicit candidate list
MAX_REJECTION_DRAWS = 64


def filter_no_positive(d: Dataset) -> Dataset:
    """Remove question groups that have no correct candidate."""
    kept = [g for g in d.groups if g.positives]
    removed = len(d.groups) - len(kept)
    record = diagnostics.emit("filter_no_positive", "removed_groups", removed)
    logger.info("Removed %d of %d groups without a correct answer (%s)", removed, len(d.groups), d.split)
    return d.with_groups(kept, record)


def filter_by_length(d: Dataset, min_tokens: int = 5, max_tokens: int = 50) -> Dataset:
    """
    Keep pairs whose question and answer have min..max tokens.

    Tokens are counted after stripping non-alphanumeric characters;
    groups left without candidates are dropped.
    """
    groups: list[QuestionGroup] = []
    dropped = 0

    def fits(text: str) -> bool:
        return min_tokens <= len(tokenize(text)) <= max_tokens

    for group in d.groups:
        if not fits(group.question_text):
            dropped += len(group.pairs)
            continue
        pairs = tuple(p for p in group.pairs if fits(p.answer_text))
        dropped += len(group.pairs) - len(pairs)
        if pairs:
            groups.append(QuestionGroup(group.question_id, group.question_text, pairs))
    record = diagnostics.emit("filter_by_length", "dropped_pairs", dropped)
    return d.with_groups(groups, record)


def _sample_indices(
    rng: np.random.Generator,
    pool_size: int,
    excluded: set[int],
    k: int,
) -> list[int]:
    """k distinct pool indices outside ``excluded``."""
    chosen: list[int] = []
    taken: set[int] = set()
    for _ in range(MAX_REJECTION_DRAWS):
        idx = int(rng.integers(pool_size))
        if idx in excluded or idx in taken:
            continue
        chosen.append(idx)
        taken.add(idx)
        if len(chosen) == k:
            return chosen
    rest = [i for i in range(pool_size) if i not in excluded and i not in taken]
    extra = rng.choice(len(rest), size=k - len(chosen), replace=False)
    return chosen + [rest[int(i)] for i in extra]


def negative_sample(d: Dataset, k: int = 4, seed: int = 0) -> Dataset:
    """
    Give every group its positives plus exactly k sampled negatives.

    Negatives are drawn without replacement from the distinct answer
    sentences of the whole split, excluding this group's own candidates.

    Args:
        d: Source dataset
        k: Negatives per group
        seed: Root seed; the "sampling" substream is used

    Raises:
        DataLoadError: If some group has fewer than k eligible answers
    """
    if k < 1:
        raise DataLoadError(f"negative sample size must be positive, got {k}")

    pool: list[str] = []
    position: dict[str, int] = {}
    for group in d.groups:
        for pair in group.pairs:
            if pair.answer_text not in position:
                position[pair.answer_text] = len(pool)
                pool.append(pair.answer_text)

    rng = substream(seed, SAMPLING)
    groups: list[QuestionGroup] = []
    for group in d.groups:
        excluded = {position[p.answer_text] for p in group.pairs}
        if len(pool) - len(excluded) < k:
            raise DataLoadError(
                f"answer pool has {len(pool) - len(excluded)} sentences outside question "
                f"{group.question_id}, need {k}"
            )
        negatives = [
            QAPair(group.question_id, group.question_text, pool[idx], 0)
            for idx in _sample_indices(rng, len(pool), excluded, k)
        ]
        groups.append(QuestionGroup(group.question_id, group.question_text, tuple(group.positives) + tuple(negatives)))

    record = diagnostics.emit("negative_sample", "sampled_negatives", k * len(groups))
    return d.with_groups(groups, record)
