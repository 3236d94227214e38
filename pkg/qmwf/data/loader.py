"""Loader for the normalized QA TSV format."""

import logging
from pathlib import Path
from typing import Optional, Union

from qmwf import diagnostics
from qmwf.data.schemas import Dataset, QAPair, QuestionGroup
from qmwf.embedding.vocab import tokenize
from qmwf.errors import DataLoadError
from qmwf.textio import read_text

logger = logging.getLogger(__name__)

FIELDS = 4
HEADER_FIRST_FIELD = "question_id"

# Fraction of malformed lines above which a file is rejected
MAX_MALFORMED_FRACTION = 0.10


def _parse(line: str) -> Optional[QAPair]:
    parts = line.split("\t")
    if len(parts) != FIELDS:
        return None
    qid, question, answer, label = (p.strip() for p in parts)
    if not qid or label not in ("0", "1"):
        return None
    return QAPair(question_id=qid, question_text=question, answer_text=answer, label=int(label))


def group_pairs(pairs: list[QAPair]) -> tuple[list[QuestionGroup], int]:
    """
    Group pairs by question id in first-seen order, dropping duplicate answers.

    Returns:
        (groups, number of duplicate (question, answer) pairs removed)
    """
    order: list[str] = []
    buckets: dict[str, list[QAPair]] = {}
    seen: set[tuple[str, str, str]] = set()
    duplicates = 0
    for pair in pairs:
        key = (pair.question_id, pair.question_text, pair.answer_text)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        if pair.question_id not in buckets:
            order.append(pair.question_id)
            buckets[pair.question_id] = []
        buckets[pair.question_id].append(pair)
    groups = [
        QuestionGroup(question_id=qid, question_text=buckets[qid][0].question_text, pairs=tuple(buckets[qid]))
        for qid in order
    ]
    return groups, duplicates


def load_tsv(path: Union[str, Path], split: Optional[str] = None) -> Dataset:
    """
    Load a QA split: ``question_id<TAB>question<TAB>answer<TAB>label`` per line.

    An optional header line starting with ``question_id`` is skipped.
    Malformed lines are skipped and counted; pairs whose question or
    answer has no tokens are dropped; identical (question, answer) pairs
    within a question are kept once.

    Args:
        path: UTF-8 TSV file
        split: Split name (defaults to the file stem)

    Returns:
        Dataset with its load diagnostics

    Raises:
        DataLoadError: If the file is unreadable or more than 10% of its
            lines are malformed
    """
    text = read_text(path)
    source = str(path)
    pairs: list[QAPair] = []
    malformed: list[str] = []
    empty = 0
    total = 0

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if lineno == 1 and line.split("\t", 1)[0].strip().lower() == HEADER_FIRST_FIELD:
            continue
        total += 1
        pair = _parse(line)
        if pair is None:
            malformed.append(f"line {lineno}: {line[:80]}")
            continue
        if not tokenize(pair.question_text) or not tokenize(pair.answer_text):
            empty += 1
            continue
        pairs.append(pair)

    if total and len(malformed) / total > MAX_MALFORMED_FRACTION:
        raise DataLoadError(
            f"{source}: {len(malformed)} of {total} lines are malformed; first: " + " | ".join(malformed[:3])
        )

    groups, duplicates = group_pairs(pairs)
    report = (
        diagnostics.emit("load_tsv", "accepted_pairs", len(pairs) - duplicates, path=source),
        diagnostics.emit("load_tsv", "malformed_lines", len(malformed), path=source, samples=malformed, warn=True),
        diagnostics.emit("load_tsv", "empty_text_pairs", empty, path=source, warn=True),
        diagnostics.emit("load_tsv", "duplicate_pairs", duplicates, path=source, warn=True),
        diagnostics.emit("load_tsv", "groups", len(groups), path=source),
    )
    logger.info("Loaded %d groups (%d pairs) from %s", len(groups), len(pairs) - duplicates, source)
    return Dataset(split=split or Path(path).stem, groups=tuple(groups), diagnostics=report)
