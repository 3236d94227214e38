"""Text to sentence matrix: word-level and character-level inputs."""

from typing import Any

import numpy as np

from qmwf.embedding.chars import (
    DEFAULT_CHARSET,
    CharEncoder,
    CharInput,
    Charset,
    char_sentence_matrix,
    char_windows,
    load_charset,
    pool_segments,
)
from qmwf.embedding.encoder import EncodedSentence, SentenceEncoder, normalize_rows
from qmwf.embedding.table import EmbeddingTable, load_embeddings, random_table, sniff_dim
from qmwf.embedding.vocab import PAD, PAD_INDEX, UNK, UNK_INDEX, Vocabulary, tokenize
from qmwf.embedding.word import WordEncoder, sentence_matrix_word
from qmwf.errors import CheckpointError


def encoder_from_state(meta: dict[str, Any], arrays: dict[str, np.ndarray]) -> SentenceEncoder:
    """Rebuild an encoder saved with ``encoder.state()``."""
    kind = meta.get("kind")
    if kind == WordEncoder.kind:
        return WordEncoder.from_state(meta, arrays)
    if kind == CharEncoder.kind:
        return CharEncoder.from_state(meta, arrays)
    raise CheckpointError(f"unknown encoder kind {kind!r}")


__all__ = [
    "DEFAULT_CHARSET",
    "CharEncoder",
    "CharInput",
    "Charset",
    "char_sentence_matrix",
    "char_windows",
    "load_charset",
    "pool_segments",
    "EncodedSentence",
    "SentenceEncoder",
    "normalize_rows",
    "EmbeddingTable",
    "load_embeddings",
    "random_table",
    "sniff_dim",
    "PAD",
    "PAD_INDEX",
    "UNK",
    "UNK_INDEX",
    "Vocabulary",
    "tokenize",
    "WordEncoder",
    "sentence_matrix_word",
    "encoder_from_state",
]
