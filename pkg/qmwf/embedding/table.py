"""Word embedding tables and the whitespace-separated text format loader."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from qmwf import diagnostics
from qmwf.diagnostics import Diagnostic
from qmwf.embedding.vocab import PAD_INDEX, UNK_INDEX, Vocabulary
from qmwf.errors import DataLoadError, DimensionError
from qmwf.textio import iter_lines

logger = logging.getLogger(__name__)


@dataclass
class EmbeddingTable:
    """Vocabulary plus a (vocab size × M) matrix; rows are updated in place when trainable."""

    vocab: Vocabulary
    matrix: np.ndarray
    trainable: bool = True
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.vocab):
            raise DimensionError(
                f"embedding matrix shape {self.matrix.shape} does not match vocabulary size {len(self.vocab)}"
            )

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def size(self) -> int:
        return len(self.vocab)

    def vector(self, token: str) -> np.ndarray:
        return self.matrix[self.vocab.index(token)]


def _parse_line(line: str, expected_dim: int) -> Optional[tuple[str, np.ndarray]]:
    """Token and vector from one line, None when malformed."""
    parts = line.split()
    if len(parts) != expected_dim + 1 or not parts[0]:
        return None
    try:
        vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
    except ValueError:
        return None
    if not np.all(np.isfinite(vec)):
        return None
    return parts[0], vec


def _is_header(line: str) -> bool:
    """word2vec-style first line: '<count> <dim>'."""
    parts = line.split()
    return len(parts) == 2 and all(p.isdigit() for p in parts)


def load_embeddings(
    path: Union[str, Path],
    expected_dim: int,
    restrict_to: Optional[Iterable[str]] = None,
    trainable: bool = True,
) -> EmbeddingTable:
    """
    Load pretrained vectors from the text format (token then ``dim`` decimals per line).

    UNK gets the mean of the loaded vectors and PAD the zero vector.
    Lines with the wrong arity or unparseable numbers are skipped and
    counted; repeated tokens keep their first vector.

    Args:
        path: Embedding file (UTF-8 text, e.g. GloVe)
        expected_dim: Vector dimension M
        restrict_to: Only keep these tokens (e.g. a dataset vocabulary)
        trainable: Whether training may update the table

    Returns:
        EmbeddingTable with its load diagnostics attached

    Raises:
        DataLoadError: If the file is unreadable or yields no usable rows
    """
    wanted = set(restrict_to) if restrict_to is not None else None
    vocab = Vocabulary()
    rows: list[np.ndarray] = []
    malformed: list[str] = []
    duplicates = 0
    filtered = 0

    for lineno, line in enumerate(iter_lines(path), start=1):
        if not line.strip():
            continue
        if lineno == 1 and _is_header(line):
            continue
        parsed = _parse_line(line, expected_dim)
        if parsed is None:
            malformed.append(f"line {lineno}: {line[:60]}")
            continue
        token, vec = parsed
        if token in vocab:
            duplicates += 1
            continue
        if wanted is not None and token not in wanted:
            filtered += 1
            continue
        vocab.add(token)
        rows.append(vec)

    if not rows:
        raise DataLoadError(f"no usable {expected_dim}-dimensional vectors in {path}")

    loaded = np.stack(rows)
    matrix = np.zeros((len(vocab), expected_dim))
    matrix[UNK_INDEX] = loaded.mean(axis=0)
    matrix[PAD_INDEX] = 0.0
    matrix[2:] = loaded

    source = str(path)
    report = [
        diagnostics.emit("load_embeddings", "loaded_vectors", len(rows), path=source),
        diagnostics.emit("load_embeddings", "malformed_lines", len(malformed), path=source, samples=malformed, warn=True),
        diagnostics.emit("load_embeddings", "duplicate_tokens", duplicates, path=source, warn=True),
    ]
    if wanted is not None:
        report.append(diagnostics.emit("load_embeddings", "outside_vocabulary", filtered, path=source))
    logger.info("Loaded %d vectors of dim %d from %s", len(rows), expected_dim, source)
    return EmbeddingTable(vocab=vocab, matrix=matrix, trainable=trainable, diagnostics=report)


def random_table(
    tokens: Iterable[str],
    dim: int,
    rng: np.random.Generator,
    trainable: bool = True,
) -> EmbeddingTable:
    """
    Table of standard-normal vectors for the given tokens.

    Used when no pretrained file is supplied; UNK is the mean, PAD zero.
    """
    vocab = Vocabulary(sorted(set(tokens)))
    matrix = np.zeros((len(vocab), dim))
    matrix[2:] = rng.standard_normal((len(vocab) - 2, dim))
    if len(vocab) > 2:
        matrix[UNK_INDEX] = matrix[2:].mean(axis=0)
    else:
        matrix[UNK_INDEX] = rng.standard_normal(dim)
    return EmbeddingTable(vocab=vocab, matrix=matrix, trainable=trainable)


def sniff_dim(path: Union[str, Path], scan_lines: int = 20) -> int:
    """
    Vector dimension of an embedding file, read from its first lines.

    A word2vec header wins; otherwise the most common field count minus one.

    Raises:
        DataLoadError: If no line looks like a vector
    """
    counts: dict[int, int] = {}
    for lineno, line in enumerate(iter_lines(path), start=1):
        if lineno > scan_lines:
            break
        if lineno == 1 and _is_header(line):
            return int(line.split()[1])
        fields = len(line.split())
        if fields > 1:
            counts[fields - 1] = counts.get(fields - 1, 0) + 1
    if not counts:
        raise DataLoadError(f"cannot tell the vector dimension of {path}")
    return max(counts, key=lambda dim: (counts[dim], dim))
