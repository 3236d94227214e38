"""Word state vectors, sentence matrices and the sentence product state."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from qmwf.errors import DegenerateInputError, DimensionError
from qmwf.tensor.dense import DenseTensor, tensor_product

NORM_TOL = 1e-9


@dataclass(frozen=True)
class StateVector:
    """Real amplitudes over the M embedding-axis basis directions, unit L2 norm."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=np.float64).reshape(-1)
        if amps.size == 0:
            raise DimensionError("a state vector needs at least one amplitude")
        if abs(float(amps @ amps) - 1.0) > NORM_TOL:
            raise DimensionError("amplitudes must satisfy Σ a_h² = 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)


@dataclass(frozen=True)
class SentenceMatrix:
    """N×M matrix whose rows are the word state vectors of a sentence."""

    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] == 0 or rows.shape[1] == 0:
            raise DimensionError(f"sentence matrix must be a nonempty N×M array, got {rows.shape}")
        norms = np.einsum("ij,ij->i", rows, rows)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise DimensionError("every sentence row must have unit L2 norm")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def length(self) -> int:
        """Number of words N."""
        return int(self.rows.shape[0])

    @property
    def dim(self) -> int:
        """Embedding dimension M."""
        return int(self.rows.shape[1])


def normalize(v: np.ndarray) -> StateVector:
    """
    Scale a real vector to unit Euclidean norm.

    Raises:
        DegenerateInputError: If every entry is zero
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateInputError("cannot normalize a zero or non-finite vector")
    return StateVector(v / norm)


def basis_probability(s: StateVector, h: int) -> float:
    """Probability ⟨e_h|ψ⟩² of measuring basis direction h."""
    if not 0 <= h < s.dim:
        raise DimensionError(f"basis index {h} out of range for dimension {s.dim}")
    return float(s.amplitudes[h] ** 2)


def product_state(s: SentenceMatrix, cap: Optional[int] = None) -> DenseTensor:
    """Rank-1 local tensor α_1 ⊗ ... ⊗ α_N of a sentence."""
    return tensor_product(list(s.rows), cap)
