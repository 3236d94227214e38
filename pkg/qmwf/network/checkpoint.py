"""Versioned, checksummed checkpoint files."""

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from qmwf.errors import CheckpointError
from qmwf.network.config import QmwfConfig
from qmwf.network.model import QmwfModel

MAGIC = b"QMWFCKPT"
FORMAT_VERSION = 1
DIGEST_SIZE = 32
_PREAMBLE = struct.Struct("<8sIQ")  # magic, version, header length


class ArrayEntry(BaseModel):
    """Location of one float64 array in the payload."""

    name: str
    shape: list[int]
    offset: int = Field(ge=0)
    nbytes: int = Field(ge=0)


class CheckpointHeader(BaseModel):
    """JSON header: model config, array table and free-form metadata."""

    format_version: int
    config: QmwfConfig
    arrays: list[ArrayEntry]
    meta: dict[str, Any] = Field(default_factory=dict)


@dataclass
class Checkpoint:
    """Loaded checkpoint: the model plus any extra arrays and metadata."""

    model: QmwfModel
    arrays: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)


def save_checkpoint(
    path: Union[str, Path],
    model: QmwfModel,
    arrays: dict[str, np.ndarray] | None = None,
    meta: dict[str, Any] | None = None,
) -> None:
    """
    Write a model (and optional extra arrays) to a checkpoint file.

    Layout: preamble (magic, version, header length; little-endian), JSON
    header, concatenated little-endian float64 arrays, SHA-256 of all
    preceding bytes.

    Args:
        path: Output file
        model: Model whose config and parameters are stored
        arrays: Extra named arrays (e.g. encoder parameters)
        meta: JSON-serializable metadata (e.g. vocabulary, encoder kind)
    """
    blocks = {f"model.{name}": value for name, value in model.params().items()}
    for name, value in (arrays or {}).items():
        blocks[f"extra.{name}"] = value

    entries: list[ArrayEntry] = []
    payload = bytearray()
    for name, value in blocks.items():
        data = np.ascontiguousarray(value, dtype="<f8")
        entries.append(ArrayEntry(name=name, shape=list(data.shape), offset=len(payload), nbytes=data.nbytes))
        payload += data.tobytes()

    header = CheckpointHeader(
        format_version=FORMAT_VERSION,
        config=model.config,
        arrays=entries,
        meta=meta or {},
    )
    header_bytes = header.model_dump_json().encode("utf-8")
    body = _PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header_bytes)) + header_bytes + bytes(payload)
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Read and verify a checkpoint file.

    Raises:
        CheckpointError: On unreadable file, bad magic, unknown version,
            checksum mismatch or malformed header
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    if len(raw) < _PREAMBLE.size + DIGEST_SIZE:
        raise CheckpointError(f"{path} is too short to be a checkpoint")
    body, digest = raw[:-DIGEST_SIZE], raw[-DIGEST_SIZE:]
    magic, version, header_len = _PREAMBLE.unpack_from(body)
    if magic != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path} has format version {version}, expected {FORMAT_VERSION}")
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path} failed its integrity check")

    start = _PREAMBLE.size
    try:
        header = CheckpointHeader.model_validate(json.loads(body[start : start + header_len]))
    except (ValueError, ValidationError) as exc:
        raise CheckpointError(f"{path} has a malformed header: {exc}") from exc

    payload = body[start + header_len :]
    blocks: dict[str, np.ndarray] = {}
    for entry in header.arrays:
        if entry.offset + entry.nbytes > len(payload):
            raise CheckpointError(f"{path}: array {entry.name} extends past the payload")
        chunk = payload[entry.offset : entry.offset + entry.nbytes]
        blocks[entry.name] = np.frombuffer(chunk, dtype="<f8").astype(np.float64).reshape(entry.shape)

    try:
        model = QmwfModel(
            config=header.config,
            kernels=blocks.pop("model.kernels"),
            out_weights=blocks.pop("model.out_weights"),
        )
    except KeyError as exc:
        raise CheckpointError(f"{path} is missing model array {exc}") from exc

    extras = {name.removeprefix("extra."): value for name, value in blocks.items()}
    return Checkpoint(model=model, arrays=extras, meta=header.meta)
