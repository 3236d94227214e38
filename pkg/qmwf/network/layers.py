"""Convolution, product pooling and matching: the projection as a CNN."""

from typing import Union

import numpy as np

from qmwf.errors import DimensionError
from qmwf.network.model import QmwfModel, Representation
from qmwf.wavefunction import SentenceMatrix

SentenceInput = Union[SentenceMatrix, np.ndarray]


def sentence_rows(s: SentenceInput) -> np.ndarray:
    """The N×M amplitude array of a sentence."""
    rows = np.asarray(s.rows if isinstance(s, SentenceMatrix) else s, dtype=np.float64)
    if rows.ndim != 2:
        raise DimensionError(f"sentence must be an N×M array, got shape {rows.shape}")
    return rows


def windows(rows: np.ndarray, patch_size: int) -> np.ndarray:
    """
    Concatenate each run of ``patch_size`` consecutive rows into one window.

    Returns:
        (P, M · patch_size) array with P = N − patch_size + 1, or zero rows
        when the sentence is shorter than a patch
    """
    n, m = rows.shape
    count = n - patch_size + 1
    if count <= 0:
        return np.zeros((0, m * patch_size))
    view = np.lib.stride_tricks.sliding_window_view(rows, (patch_size, m))
    return view.reshape(count, patch_size * m)


def convolve(s: SentenceInput, m: QmwfModel) -> np.ndarray:
    """
    Channel responses Σ[r, i] = ⟨e_{r,i}, window_i⟩.

    A sentence shorter than the patch size has no windows; the empty
    response matrix pools to the neutral value.

    Returns:
        (R, P) array
    """
    rows = sentence_rows(s)
    if rows.shape[1] != m.config.embed_dim:
        raise DimensionError(f"sentence rows have length {rows.shape[1]}, model expects {m.config.embed_dim}")
    wins = windows(rows, m.config.patch_size)
    return np.einsum("rpw,pw->rp", m.kernels_at(wins.shape[0]), wins)


def product_pool(sigma: np.ndarray) -> np.ndarray:
    """Π_r = Π_i Σ[r, i]; an empty row pools to 1."""
    return np.prod(np.asarray(sigma, dtype=np.float64), axis=1)


def log_product_pool(sigma: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Log-domain product pooling.

    Returns:
        (Σ_i log(|Σ[r, i]| + ε), (−1)^{#negative Σ[r, i]}) per channel
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    logs = np.sum(np.log(np.abs(sigma) + epsilon), axis=1)
    negatives = np.count_nonzero(sigma < 0, axis=1)
    signs = np.where(negatives % 2 == 0, 1.0, -1.0)
    return logs, signs


def geometric_pool(sigma: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Length-normalized log-domain pooling: exp(Σ_i log(|Σ[r, i]| + ε) / P).

    The P-th root of the pooled magnitude stays on the scale of a single
    response for any sentence length. An empty row pools to 1.

    Returns:
        (magnitudes, sign parities) per channel
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    logs, signs = log_product_pool(sigma, epsilon)
    return np.exp(logs / max(sigma.shape[1], 1)), signs


def forward(s: SentenceInput, m: QmwfModel) -> Representation:
    """
    Represent a sentence as v_r = t_r · Π_r.

    With patch_size 1, unshared kernels and linear pooling, Σ_r v_r equals
    the projection of the CP-decomposed global tensor onto the sentence
    product state. In the log domain v_r = t_r · exp(L_r / P) with sign
    parity s_r, L_r being the log-domain pooling over P windows.
    """
    sigma = convolve(s, m)
    if m.config.log_domain:
        magnitudes, signs = geometric_pool(sigma, m.config.epsilon)
        return Representation(values=m.out_weights * magnitudes, signs=signs)
    return Representation(values=m.out_weights * product_pool(sigma))


def match_score(q: Representation, a: Representation) -> float:
    """Projection of the answer representation on the question representation, ⟨v^q, v^a⟩."""
    if q.size != a.size:
        raise DimensionError(f"representation lengths differ: {q.size} vs {a.size}")
    return float(np.dot(q.signed(), a.signed()))
