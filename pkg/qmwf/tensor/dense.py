"""Dense equal-mode tensors stored flat in row-major order."""

from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from qmwf.config import get_settings
from qmwf.errors import CapacityError, DimensionError


def element_cap(cap: Optional[int] = None) -> int:
    """Resolve the element cap (explicit value or configured default)."""
    return int(cap) if cap is not None else get_settings().tensor_element_cap


def check_capacity(order: int, dim: int, cap: Optional[int] = None) -> int:
    """
    Check that a dense tensor of the given shape fits the element cap.

    Returns:
        Number of elements, dim ** order

    Raises:
        CapacityError: If dim ** order exceeds the cap
    """
    limit = element_cap(cap)
    size = dim**order
    if size > limit:
        raise CapacityError(
            f"dense tensor of order {order} and mode dimension {dim} needs {size} "
            f"elements, cap is {limit}"
        )
    return size


@dataclass(frozen=True)
class DenseTensor:
    """
    Order-N tensor with M-dimensional modes.

    ``data`` holds M ** N finite doubles with the last index varying fastest.
    """

    order: int
    dim: int
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.order < 1 or self.dim < 1:
            raise DimensionError(f"order and dim must be positive, got {self.order}, {self.dim}")
        data = np.ascontiguousarray(self.data, dtype=np.float64).reshape(-1)
        if data.size != self.dim**self.order:
            raise DimensionError(
                f"expected {self.dim ** self.order} entries for order {self.order}, "
                f"dim {self.dim}; got {data.size}"
            )
        if not np.all(np.isfinite(data)):
            raise DimensionError("tensor entries must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "DenseTensor":
        """Wrap an N-dimensional array with equal mode sizes."""
        array = np.asarray(array, dtype=np.float64)
        if array.ndim == 0 or len(set(array.shape)) != 1:
            raise DimensionError(f"all modes must have equal size, got shape {array.shape}")
        return cls(order=array.ndim, dim=array.shape[0], data=array.reshape(-1))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.dim,) * self.order

    @property
    def array(self) -> np.ndarray:
        """Read-only N-dimensional view of the data."""
        return self.data.reshape(self.shape)

    def flat_index(self, coords: Sequence[int]) -> int:
        """Map (h_1, ..., h_N) to the flat row-major position."""
        return flat_index(coords, self.dim)

    def coords(self, index: int) -> tuple[int, ...]:
        """Map a flat position back to (h_1, ..., h_N)."""
        return coords_of(index, self.order, self.dim)

    def __getitem__(self, coords: Sequence[int]) -> float:
        return float(self.data[self.flat_index(coords)])

    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self.data))


def flat_index(coords: Sequence[int], dim: int) -> int:
    """Row-major flat index of a coordinate tuple."""
    index = 0
    for h in coords:
        if not 0 <= h < dim:
            raise DimensionError(f"coordinate {h} out of range for dimension {dim}")
        index = index * dim + int(h)
    return index


def coords_of(index: int, order: int, dim: int) -> tuple[int, ...]:
    """Inverse of flat_index."""
    if not 0 <= index < dim**order:
        raise DimensionError(f"flat index {index} out of range")
    out = []
    for _ in range(order):
        index, h = divmod(index, dim)
        out.append(h)
    return tuple(reversed(out))


def tensor_product(vectors: Sequence[np.ndarray], cap: Optional[int] = None) -> DenseTensor:
    """
    Build the rank-1 tensor v_1 ⊗ ... ⊗ v_N.

    Entry (h_1, ..., h_N) is the product of the vector components v_i[h_i].

    Args:
        vectors: N vectors of equal length M
        cap: Element cap override

    Returns:
        DenseTensor of order N and dim M

    Raises:
        DimensionError: If the vectors differ in length or the list is empty
        CapacityError: If M ** N exceeds the cap
    """
    if len(vectors) == 0:
        raise DimensionError("tensor_product needs at least one vector")
    arrays = [np.asarray(v, dtype=np.float64).reshape(-1) for v in vectors]
    dim = arrays[0].size
    if dim == 0 or any(a.size != dim for a in arrays):
        raise DimensionError(f"vector lengths differ: {[a.size for a in arrays]}")
    check_capacity(len(arrays), dim, cap)
    data = reduce(lambda acc, v: np.outer(acc, v).reshape(-1), arrays[1:], arrays[0])
    return DenseTensor(order=len(arrays), dim=dim, data=data)


def inner_product(a: DenseTensor, b: DenseTensor) -> float:
    """
    Full contraction Σ a[h_1..h_N] · b[h_1..h_N].

    Raises:
        DimensionError: If order or dim differ
    """
    if a.order != b.order or a.dim != b.dim:
        raise DimensionError(
            f"shape mismatch: order {a.order}/dim {a.dim} vs order {b.order}/dim {b.dim}"
        )
    return float(np.dot(a.data, b.data))
