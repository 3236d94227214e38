"""Dense small-order tensor algebra and CP decomposition."""

from qmwf.tensor.dense import (
    DenseTensor,
    check_capacity,
    coords_of,
    flat_index,
    inner_product,
    tensor_product,
)
from qmwf.tensor.cp import ALSResult, CPFactors, cp_als, cp_reconstruct, projection_bruteforce

__all__ = [
    "DenseTensor",
    "check_capacity",
    "coords_of",
    "flat_index",
    "inner_product",
    "tensor_product",
    "ALSResult",
    "CPFactors",
    "cp_als",
    "cp_reconstruct",
    "projection_bruteforce",
]
