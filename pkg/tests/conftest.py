"""Shared fixtures."""

import numpy as np
import pytest

from qmwf.data import planted_data


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def planted():
    return planted_data(n_train=60, n_dev=30, seed=0)


@pytest.fixture
def write_lines(tmp_path):
    def _write(name: str, lines: list[str]):
        path = tmp_path / name
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path

    return _write
