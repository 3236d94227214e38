"""Character-level input: one-hot char windows, convolution and max pooling."""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from qmwf.embedding.encoder import EncodedSentence, normalize_rows, normalize_rows_backward
from qmwf.errors import DimensionError
from qmwf.textio import read_text
from qmwf.wavefunction import SentenceMatrix

DEFAULT_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789 .,;:!?'\"-()/&$%#@*+=<>[]"
PAD_CHAR_INDEX = 0
UNK_CHAR_INDEX = 1
SPACE_TOKEN = "<space>"

# Segment length when a text has no word boundaries
FALLBACK_STRIDE = 3

_WORD_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class Charset:
    """Character inventory; index 0 is the pad character and 1 the unknown character."""

    chars: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index: dict[str, int] = {}
        for ch in self.chars:
            if len(ch) != 1:
                raise DimensionError(f"charset entries must be single characters, got {ch!r}")
            index.setdefault(ch, len(index) + 2)
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        """One-hot dimension d, including the pad and unknown characters."""
        return len(self._index) + 2

    def ids(self, text: str) -> np.ndarray:
        return np.array([self._index.get(ch, UNK_CHAR_INDEX) for ch in text], dtype=np.int64)


DEFAULT_CHARSET = Charset(tuple(DEFAULT_CHARS))


def load_charset(path: Union[str, Path]) -> Charset:
    """
    Read a charset file: one character per line, ``<space>`` for the space.

    Blank lines are ignored.
    """
    chars = []
    for line in read_text(path).splitlines():
        if line == SPACE_TOKEN:
            chars.append(" ")
        elif line.strip():
            chars.append(line.strip()[0])
    return Charset(tuple(chars))


@dataclass(frozen=True)
class CharInput:
    """Char path settings: charset (one-hot dim d), window k, pooling segments."""

    charset: Charset = DEFAULT_CHARSET
    window: int = 3
    pool: Union[str, int] = "word"

    def __post_init__(self) -> None:
        if self.window < 1:
            raise DimensionError("char window must be at least 1")
        if self.pool != "word" and (not isinstance(self.pool, int) or self.pool < 1):
            raise DimensionError(f"char pool must be 'word' or a positive stride, got {self.pool!r}")

    @property
    def char_dim(self) -> int:
        return self.charset.size

    @property
    def window_dim(self) -> int:
        """Length d · k of a window vector z_m."""
        return self.char_dim * self.window


def char_windows(text: str, ci: CharInput) -> np.ndarray:
    """
    Concatenated one-hot windows Z = [z_1, ..., z_N], N = N̄ − k + 1.

    Texts shorter than k are padded with the pad character.

    Returns:
        (N, d · k) array
    """
    ids = ci.charset.ids(text.lower())
    if ids.size < ci.window:
        ids = np.concatenate([ids, np.full(ci.window - ids.size, PAD_CHAR_INDEX, dtype=np.int64)])
    count = ids.size - ci.window + 1
    d = ci.char_dim
    z = np.zeros((count, d * ci.window))
    rows = np.arange(count)
    for j in range(ci.window):
        z[rows, j * d + ids[j : j + count]] = 1.0
    return z


def pool_segments(text: str, count: int, pool: Union[str, int]) -> list[np.ndarray]:
    """
    Window positions pooled into each output row.

    With ``pool == "word"`` each whitespace-delimited word yields one segment
    (the windows starting inside it); without word boundaries, or with an
    integer pool, fixed non-overlapping strides are used.
    """
    if pool == "word":
        spans = [(m.start(), m.end()) for m in _WORD_RE.finditer(text.lower())]
        if spans:
            segments = []
            for start, end in spans:
                idx = np.arange(start, min(end, count))
                segments.append(idx if idx.size else np.array([min(start, count - 1)]))
            return segments
        stride = FALLBACK_STRIDE
    else:
        stride = int(pool)
    return [np.arange(j, min(j + stride, count)) for j in range(0, count, stride)]


def _max_pool(y: np.ndarray, segments: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Max over each segment per output channel; returns values and argmax window positions."""
    pooled = np.empty((len(segments), y.shape[1]))
    argmax = np.empty((len(segments), y.shape[1]), dtype=np.int64)
    for i, seg in enumerate(segments):
        block = y[seg]
        best = np.argmax(block, axis=0)
        argmax[i] = seg[best]
        pooled[i] = block[best, np.arange(y.shape[1])]
    return pooled, argmax


def char_sentence_matrix(
    text: str,
    ci: CharInput,
    kernels: np.ndarray,
    embed_dim: int,
    max_positions: Optional[int] = None,
) -> SentenceMatrix:
    """
    Sentence matrix of a text through the char path.

    Slides a k-char window, applies ``embed_dim`` convolution kernels to each
    window vector, max-pools over segments and normalizes rows.

    Args:
        text: Raw text
        ci: Char path settings
        kernels: (embed_dim, d · k) convolution kernels
        embed_dim: Output dimension M
        max_positions: Keep at most this many pooled rows
    """
    return SentenceMatrix(_encode_chars(text, ci, kernels, embed_dim, max_positions)[0])


def _encode_chars(
    text: str,
    ci: CharInput,
    kernels: np.ndarray,
    embed_dim: int,
    max_positions: Optional[int],
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    kernels = np.asarray(kernels, dtype=np.float64)
    if kernels.shape != (embed_dim, ci.window_dim):
        raise DimensionError(f"char kernels have shape {kernels.shape}, expected {(embed_dim, ci.window_dim)}")
    z = char_windows(text, ci)
    segments = pool_segments(text, z.shape[0], ci.pool)[:max_positions]
    pooled, argmax = _max_pool(z @ kernels.T, segments)
    rows, norms = normalize_rows(pooled)
    return rows, (z, argmax, norms)


class CharEncoder:
    """Char path with trainable convolution kernels; one-hot char embeddings stay fixed."""

    kind = "char"

    def __init__(
        self,
        ci: CharInput,
        kernels: np.ndarray,
        max_positions: int = 40,
        trainable: bool = True,
    ) -> None:
        self.ci = ci
        self.kernels = np.asarray(kernels, dtype=np.float64)
        self.max_positions = max_positions
        self.trainable = trainable

    @classmethod
    def initialize(
        cls,
        ci: CharInput,
        embed_dim: int,
        rng: np.random.Generator,
        max_positions: int = 40,
    ) -> "CharEncoder":
        """Kernels uniform on ±1/√(d · k)."""
        bound = 1.0 / np.sqrt(ci.window_dim)
        kernels = rng.uniform(-bound, bound, size=(embed_dim, ci.window_dim))
        return cls(ci, kernels, max_positions=max_positions)

    @property
    def embed_dim(self) -> int:
        return int(self.kernels.shape[0])

    def encode(self, text: str) -> EncodedSentence:
        rows, cache = _encode_chars(text, self.ci, self.kernels, self.embed_dim, self.max_positions)
        return EncodedSentence(rows=rows, cache=cache)

    def params(self) -> dict[str, np.ndarray]:
        return {"char_kernels": self.kernels} if self.trainable else {}

    def backward(self, encoded: EncodedSentence, d_rows: np.ndarray, grads: dict[str, np.ndarray]) -> None:
        """Route row gradients through normalization and max pooling into the kernels."""
        if not self.trainable:
            return
        z, argmax, norms = encoded.cache
        d_pooled = normalize_rows_backward(encoded.rows, norms, d_rows)
        grads["char_kernels"] += np.einsum("ph,phw->hw", d_pooled, z[argmax])

    def state(self) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
        meta = {
            "kind": self.kind,
            "chars": "".join(self.ci.charset.chars),
            "window": self.ci.window,
            "pool": self.ci.pool,
            "trainable": self.trainable,
            "max_positions": self.max_positions,
        }
        return meta, {"char_kernels": self.kernels}

    @classmethod
    def from_state(cls, meta: dict[str, Any], arrays: dict[str, np.ndarray]) -> "CharEncoder":
        ci = CharInput(charset=Charset(tuple(meta["chars"])), window=meta["window"], pool=meta["pool"])
        return cls(
            ci,
            arrays["char_kernels"],
            max_positions=meta.get("max_positions", 40),
            trainable=meta.get("trainable", True),
        )
