"""Converters from native corpus layouts to the normalized QA TSV."""

import logging
from pathlib import Path
from typing import Iterable, Union

from qmwf.errors import DataLoadError
from qmwf.textio import read_text

logger = logging.getLogger(__name__)

WIKIQA_COLUMNS = ["QuestionID", "Question", "DocumentID", "DocumentTitle", "SentenceID", "Sentence", "Label"]
TRECQA_FILES = ("id", "a.toks", "b.toks", "sim")


def _clean(field: str) -> str:
    """Collapse whitespace so a field never contains tabs or newlines."""
    return " ".join(field.split())


def _write(rows: Iterable[tuple[str, str, str, str]], dst: Union[str, Path]) -> int:
    count = 0
    with open(dst, "w", encoding="utf-8", newline="\n") as fh:
        for qid, question, answer, label in rows:
            fh.write(f"{_clean(qid)}\t{_clean(question)}\t{_clean(answer)}\t{label.strip()}\n")
            count += 1
    return count


def convert_wikiqa(src: Union[str, Path], dst: Union[str, Path]) -> int:
    """
    WikiQA ``WikiQA-{train,dev,test}.tsv`` → normalized TSV.

    Keeps QuestionID, Question, Sentence and Label.

    Returns:
        Number of rows written
    """
    lines = read_text(src).splitlines()
    if not lines or lines[0].split("\t") != WIKIQA_COLUMNS:
        raise DataLoadError(f"{src} does not start with the WikiQA header {WIKIQA_COLUMNS}")

    def rows() -> Iterable[tuple[str, str, str, str]]:
        for lineno, line in enumerate(lines[1:], start=2):
            cols = line.split("\t")
            if len(cols) != len(WIKIQA_COLUMNS):
                logger.warning("Skipping malformed WikiQA line %d in %s", lineno, src)
                continue
            yield cols[0], cols[1], cols[5], cols[6].strip()

    written = _write(rows(), dst)
    logger.info("Converted %d WikiQA rows from %s", written, src)
    return written


def convert_trecqa(src_dir: Union[str, Path], dst: Union[str, Path]) -> int:
    """
    TREC-QA directory with parallel ``id``, ``a.toks``, ``b.toks``, ``sim`` files → normalized TSV.

    Returns:
        Number of rows written
    """
    src_dir = Path(src_dir)
    missing = [name for name in TRECQA_FILES if not (src_dir / name).is_file()]
    if missing:
        raise DataLoadError(f"{src_dir} is missing TREC-QA files: {', '.join(missing)}")
    columns = [read_text(src_dir / name).splitlines() for name in TRECQA_FILES]
    lengths = {len(c) for c in columns}
    if len(lengths) != 1:
        raise DataLoadError(f"TREC-QA files in {src_dir} have different line counts: {sorted(lengths)}")
    written = _write(zip(*columns), dst)
    logger.info("Converted %d TREC-QA rows from %s", written, src_dir)
    return written
