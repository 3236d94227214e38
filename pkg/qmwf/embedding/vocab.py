"""Tokenization and vocabulary."""

import re
from typing import Iterable, Iterator

UNK = "<unk>"
PAD = "<pad>"
UNK_INDEX = 0
PAD_INDEX = 1

# Leading/trailing characters that are neither letters nor digits
_EDGE_RE = re.compile(r"^[\W_]+|[\W_]+$")


def tokenize(text: str) -> list[str]:
    """
    Lowercase, split on Unicode whitespace, strip non-alphanumeric edges.

    Tokens that are empty after stripping are dropped.
    """
    tokens = []
    for raw in text.lower().split():
        token = _EDGE_RE.sub("", raw)
        if token:
            tokens.append(token)
    return tokens


class Vocabulary:
    """Dense token ↔ index map with UNK at 0 and PAD at 1."""

    def __init__(self, tokens: Iterable[str] = ()) -> None:
        self._index: dict[str, int] = {UNK: UNK_INDEX, PAD: PAD_INDEX}
        self._tokens: list[str] = [UNK, PAD]
        for token in tokens:
            self.add(token)

    def add(self, token: str) -> int:
        """Add a token if new; return its index."""
        if token not in self._index:
            self._index[token] = len(self._tokens)
            self._tokens.append(token)
        return self._index[token]

    def index(self, token: str) -> int:
        """Index of a token, UNK_INDEX when unknown."""
        return self._index.get(token, UNK_INDEX)

    def indices(self, tokens: Iterable[str]) -> list[int]:
        return [self.index(t) for t in tokens]

    def token(self, index: int) -> str:
        return self._tokens[index]

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def __contains__(self, token: object) -> bool:
        return token in self._index

    def __len__(self) -> int:
        return len(self._tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self._tokens)
