"""Common interface of the text → sentence matrix encoders."""

from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np

# Row norms below this are treated as zero vectors
ZERO_NORM = 1e-12


@dataclass(frozen=True)
class EncodedSentence:
    """Unit-norm rows fed to the network plus what the encoder needs for backward."""

    rows: np.ndarray
    cache: Any = None

    @property
    def length(self) -> int:
        return int(self.rows.shape[0])


class SentenceEncoder(Protocol):
    """Builds sentence matrices from text and backpropagates into its own parameters."""

    kind: str

    @property
    def embed_dim(self) -> int: ...

    def encode(self, text: str) -> EncodedSentence: ...

    def params(self) -> dict[str, np.ndarray]: ...

    def backward(self, encoded: EncodedSentence, d_rows: np.ndarray, grads: dict[str, np.ndarray]) -> None: ...

    def state(self) -> tuple[dict[str, Any], dict[str, np.ndarray]]: ...


def normalize_rows(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    L2-normalize rows; all-zero rows become the uniform vector 1/√M.

    Returns:
        (unit rows, original row norms)
    """
    norms = np.linalg.norm(raw, axis=1)
    dim = raw.shape[1]
    safe = np.where(norms > ZERO_NORM, norms, 1.0)
    rows = raw / safe[:, None]
    rows[norms <= ZERO_NORM] = 1.0 / np.sqrt(dim)
    return rows, norms


def normalize_rows_backward(rows: np.ndarray, norms: np.ndarray, d_rows: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the raw rows of normalize_rows (zero for replaced rows)."""
    proj = np.einsum("ij,ij->i", rows, d_rows)
    safe = np.where(norms > ZERO_NORM, norms, 1.0)
    d_raw = (d_rows - rows * proj[:, None]) / safe[:, None]
    d_raw[norms <= ZERO_NORM] = 0.0
    return d_raw
