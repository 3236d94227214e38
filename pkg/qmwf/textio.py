"""Robust decoding of input text files."""

from pathlib import Path
from typing import Iterator, Union

from charset_normalizer import from_bytes

from qmwf.errors import DataLoadError

# Bytes inspected when guessing the encoding of a large file
SNIFF_BYTES = 1 << 20


def decode_text(content: bytes) -> str:
    """
    Decode bytes into text robustly.

    Tries strict UTF-8 first, then charset_normalizer detection, then
    UTF-8 with replacement.
    """
    try:
        return content.decode("utf-8")
    except UnicodeDecodeError:
        pass
    best = from_bytes(content).best()
    if best and best.encoding:
        return str(best)
    return content.decode("utf-8", errors="replace")


def detect_encoding(path: Union[str, Path]) -> str:
    """Guess a file's encoding from its first bytes (UTF-8 when unsure)."""
    with open(path, "rb") as fh:
        sample = fh.read(SNIFF_BYTES)
    try:
        sample.decode("utf-8")
        return "utf-8"
    except UnicodeDecodeError as exc:
        # A multi-byte character cut at the sample boundary is still UTF-8
        if exc.start >= len(sample) - 4:
            return "utf-8"
    best = from_bytes(sample).best()
    return best.encoding if best and best.encoding else "utf-8"


def read_text(path: Union[str, Path]) -> str:
    """Read a whole file as text."""
    try:
        return decode_text(Path(path).read_bytes())
    except OSError as exc:
        raise DataLoadError(f"cannot read {path}: {exc}") from exc


def iter_lines(path: Union[str, Path]) -> Iterator[str]:
    """Stream a file line by line without trailing newlines."""
    try:
        encoding = detect_encoding(path)
        with open(path, "r", encoding=encoding, errors="replace") as fh:
            for line in fh:
                yield line.rstrip("\r\n")
    except OSError as exc:
        raise DataLoadError(f"cannot read {path}: {exc}") from exc
