"""Product-pooling convolutional network realizing the sentence projection."""

from qmwf.network.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from qmwf.network.config import QmwfConfig
from qmwf.network.layers import (
    convolve,
    forward,
    geometric_pool,
    log_product_pool,
    match_score,
    product_pool,
    sentence_rows,
    windows,
)
from qmwf.network.model import QmwfModel, Representation

__all__ = [
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "QmwfConfig",
    "QmwfModel",
    "Representation",
    "convolve",
    "forward",
    "geometric_pool",
    "log_product_pool",
    "match_score",
    "product_pool",
    "sentence_rows",
    "windows",
]
