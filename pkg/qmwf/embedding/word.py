"""Word-level input: token embeddings as word state vectors."""

from typing import Any, Optional

import numpy as np

from qmwf.embedding.encoder import EncodedSentence, normalize_rows, normalize_rows_backward
from qmwf.embedding.table import EmbeddingTable
from qmwf.embedding.vocab import Vocabulary, tokenize
from qmwf.errors import DegenerateInputError
from qmwf.wavefunction import SentenceMatrix

DEFAULT_MAX_POSITIONS = 40


def sentence_matrix_word(
    tokens: list[str],
    table: EmbeddingTable,
    max_positions: Optional[int] = DEFAULT_MAX_POSITIONS,
) -> SentenceMatrix:
    """
    Stack the normalized embeddings of a token list.

    Unknown tokens use the UNK row; zero rows (PAD) become the uniform
    vector before normalization. Sentences are truncated to max_positions.

    Raises:
        DegenerateInputError: If the token list is empty
    """
    if not tokens:
        raise DegenerateInputError("cannot build a sentence matrix from an empty token list")
    ids = table.vocab.indices(tokens[:max_positions])
    rows, _ = normalize_rows(table.matrix[ids])
    return SentenceMatrix(rows)


class WordEncoder:
    """Tokenize, look up and normalize; gradients flow into the embedding rows."""

    kind = "word"

    def __init__(self, table: EmbeddingTable, max_positions: int = DEFAULT_MAX_POSITIONS) -> None:
        self.table = table
        self.max_positions = max_positions

    @property
    def embed_dim(self) -> int:
        return self.table.dim

    def encode(self, text: str) -> EncodedSentence:
        tokens = tokenize(text)
        if not tokens:
            raise DegenerateInputError(f"no tokens in {text[:40]!r}")
        ids = np.array(self.table.vocab.indices(tokens[: self.max_positions]), dtype=np.int64)
        rows, norms = normalize_rows(self.table.matrix[ids])
        return EncodedSentence(rows=rows, cache=(ids, norms))

    def params(self) -> dict[str, np.ndarray]:
        return {"embeddings": self.table.matrix} if self.table.trainable else {}

    def backward(self, encoded: EncodedSentence, d_rows: np.ndarray, grads: dict[str, np.ndarray]) -> None:
        """Accumulate the gradient of the touched embedding rows into grads['embeddings']."""
        if not self.table.trainable:
            return
        ids, norms = encoded.cache
        d_raw = normalize_rows_backward(encoded.rows, norms, d_rows)
        np.add.at(grads["embeddings"], ids, d_raw)

    def state(self) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
        meta = {
            "kind": self.kind,
            "vocab": self.table.vocab.tokens,
            "trainable": self.table.trainable,
            "max_positions": self.max_positions,
        }
        return meta, {"embeddings": self.table.matrix}

    @classmethod
    def from_state(cls, meta: dict[str, Any], arrays: dict[str, np.ndarray]) -> "WordEncoder":
        vocab = Vocabulary(meta["vocab"][2:])
        table = EmbeddingTable(vocab=vocab, matrix=arrays["embeddings"], trainable=meta.get("trainable", True))
        return cls(table, max_positions=meta.get("max_positions", DEFAULT_MAX_POSITIONS))
