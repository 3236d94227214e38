import struct

import numpy as np
import pytest

from qmwf.errors import CheckpointError
from qmwf.network import QmwfConfig, QmwfModel, forward, load_checkpoint, save_checkpoint
from qmwf.network.checkpoint import FORMAT_VERSION, MAGIC


@pytest.fixture
def model(rng):
    config = QmwfConfig(embed_dim=3, channels=4, patch_size=2, log_domain=True, max_positions=5)
    m = QmwfModel.initialize(config, rng)
    m.out_weights[:] = rng.standard_normal(4)
    return m


def test_checkpoint_round_trip(tmp_path, model, rng):
    path = tmp_path / "model.qmwf"
    extra = {"embeddings": rng.standard_normal((6, 3))}
    save_checkpoint(path, model, arrays=extra, meta={"encoder": {"kind": "word"}, "seed": 7})

    ckpt = load_checkpoint(path)
    assert ckpt.model.config == model.config
    np.testing.assert_array_equal(ckpt.model.kernels, model.kernels)
    np.testing.assert_array_equal(ckpt.model.out_weights, model.out_weights)
    np.testing.assert_array_equal(ckpt.arrays["embeddings"], extra["embeddings"])
    assert ckpt.meta == {"encoder": {"kind": "word"}, "seed": 7}

    rows = np.eye(3)
    np.testing.assert_array_equal(forward(rows, ckpt.model).signed(), forward(rows, model).signed())


def test_checkpoint_starts_with_magic_and_version(tmp_path, model):
    path = tmp_path / "model.qmwf"
    save_checkpoint(path, model)
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    assert struct.unpack_from("<I", raw, 8)[0] == FORMAT_VERSION


def test_corrupted_payload_is_detected(tmp_path, model):
    path = tmp_path / "model.qmwf"
    save_checkpoint(path, model)
    raw = bytearray(path.read_bytes())
    raw[-40] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="integrity"):
        load_checkpoint(path)


def test_unknown_version_is_rejected(tmp_path, model):
    path = tmp_path / "model.qmwf"
    save_checkpoint(path, model)
    raw = bytearray(path.read_bytes())
    struct.pack_into("<I", raw, 8, FORMAT_VERSION + 1)
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_foreign_and_truncated_files_are_rejected(tmp_path, model):
    foreign = tmp_path / "notes.txt"
    foreign.write_bytes(b"x" * 100)
    with pytest.raises(CheckpointError, match="not a checkpoint"):
        load_checkpoint(foreign)

    short = tmp_path / "short.qmwf"
    short.write_bytes(MAGIC)
    with pytest.raises(CheckpointError):
        load_checkpoint(short)

    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.qmwf")
