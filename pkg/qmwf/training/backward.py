"""Analytic gradients of the ranking loss through matching, pooling and convolution."""

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from qmwf.embedding.encoder import EncodedSentence, SentenceEncoder
from qmwf.errors import GradientError
from qmwf.network.layers import SentenceInput, convolve, geometric_pool, product_pool, sentence_rows, windows
from qmwf.network.model import QmwfModel
from qmwf.training.hyper import HyperParams
from qmwf.training.loss import hinge_grad, pairwise_hinge_loss

# (question, correct answer, wrong answer) texts
Triplet = tuple[str, str, str]


@dataclass
class Gradients:
    """
    Gradient arrays by parameter block name.

    ``inputs`` holds gradients w.r.t. the sentence rows when the caller
    passed sentence matrices directly.
    """

    blocks: dict[str, np.ndarray]
    inputs: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.blocks[name]

    def check_finite(self) -> None:
        """
        Raises:
            GradientError: Naming the first block with a NaN or infinite entry
        """
        for name, grad in self.blocks.items():
            if not np.all(np.isfinite(grad)):
                raise GradientError(name)
        for name, grad in self.inputs.items():
            if not np.all(np.isfinite(grad)):
                raise GradientError(f"input.{name}")


@dataclass(frozen=True)
class SentencePass:
    """Forward intermediates of one sentence."""

    length: int
    windows: np.ndarray
    sigma: np.ndarray
    pooled: np.ndarray
    signs: np.ndarray
    values: np.ndarray


def forward_pass(model: QmwfModel, s: SentenceInput) -> SentencePass:
    """Forward a sentence keeping what backward_pass needs; ``values`` is the signed representation."""
    rows = sentence_rows(s)
    sigma = convolve(rows, model)
    if model.config.log_domain:
        pooled, signs = geometric_pool(sigma, model.config.epsilon)
    else:
        pooled, signs = product_pool(sigma), np.ones(model.config.channels)
    return SentencePass(
        length=rows.shape[0],
        windows=windows(rows, model.config.patch_size),
        sigma=sigma,
        pooled=pooled,
        signs=signs,
        values=signs * model.out_weights * pooled,
    )


def _products_except(sigma: np.ndarray) -> np.ndarray:
    """Π_{j≠i} Σ[r, j] for every (r, i), from prefix and suffix products."""
    prefix = np.ones_like(sigma)
    suffix = np.ones_like(sigma)
    if sigma.shape[1] > 1:
        prefix[:, 1:] = np.cumprod(sigma[:, :-1], axis=1)
        suffix[:, :-1] = np.cumprod(sigma[:, ::-1], axis=1)[:, ::-1][:, 1:]
    return prefix * suffix


def backward_pass(model: QmwfModel, sp: SentencePass, d_values: np.ndarray, grads: dict[str, np.ndarray]) -> np.ndarray:
    """
    Backpropagate d loss / d values of one sentence.

    Accumulates into grads['kernels'] and grads['out_weights'].

    Returns:
        Gradient w.r.t. the sentence rows, shape (N, M)
    """
    cfg = model.config
    if cfg.log_domain:
        # Sign parity is piecewise constant
        grads["out_weights"] += d_values * sp.signs * sp.pooled
        d_pooled = d_values * sp.signs * model.out_weights
        # d exp(L / P) / dΣ = exp(L / P) · sign(Σ) / (P · (|Σ| + ε))
        n_windows = max(sp.sigma.shape[1], 1)
        d_sigma = (d_pooled * sp.pooled)[:, None] * np.sign(sp.sigma) / (n_windows * (np.abs(sp.sigma) + cfg.epsilon))
    else:
        grads["out_weights"] += d_values * sp.pooled
        d_pooled = d_values * model.out_weights
        d_sigma = d_pooled[:, None] * _products_except(sp.sigma)

    positions = sp.sigma.shape[1]
    d_rows = np.zeros((sp.length, cfg.embed_dim))
    if positions == 0:
        return d_rows

    d_kernels = d_sigma[:, :, None] * sp.windows[None, :, :]
    if cfg.shared_kernels:
        grads["kernels"][:, 0] += d_kernels.sum(axis=1)
    else:
        grads["kernels"][:, :positions] += d_kernels

    d_windows = np.einsum("rp,rpw->pw", d_sigma, model.kernels_at(positions))
    m = cfg.embed_dim
    for j in range(cfg.patch_size):
        d_rows[j : j + positions] += d_windows[:, j * m : (j + 1) * m]
    return d_rows


def _zero_grads(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(p) for name, p in params.items()}


def _add_l2(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], l2_lambda: float) -> float:
    """Add λ·θ to every block; return (λ/2)·Σ||θ||²."""
    penalty = 0.0
    for name, p in params.items():
        grads[name] += l2_lambda * p
        penalty += 0.5 * l2_lambda * float(np.sum(p * p))
    return penalty


def backward(
    model: QmwfModel,
    q: SentenceInput,
    a_pos: SentenceInput,
    a_neg: SentenceInput,
    hp: HyperParams,
) -> tuple[float, Gradients]:
    """
    Loss and gradients of one (question, correct, wrong) triplet.

    The loss is the hinge on the two matching scores plus the L2 penalty
    of the model parameters. Row gradients are returned in
    ``Gradients.inputs`` under "question", "positive" and "negative".

    Raises:
        GradientError: If any gradient is non-finite
    """
    params = model.params()
    grads = _zero_grads(params)
    passes = {name: forward_pass(model, s) for name, s in (("question", q), ("positive", a_pos), ("negative", a_neg))}
    uq, up, un = (passes[k].values for k in ("question", "positive", "negative"))
    s_pos, s_neg = float(uq @ up), float(uq @ un)
    g_pos, g_neg = hinge_grad(s_pos, s_neg, hp.margin)

    d_values = {
        "question": g_pos * up + g_neg * un,
        "positive": g_pos * uq,
        "negative": g_neg * uq,
    }
    inputs = {name: backward_pass(model, passes[name], d_values[name], grads) for name in passes}
    loss = pairwise_hinge_loss(s_pos, s_neg, hp.margin) + _add_l2(params, grads, hp.l2_lambda)

    result = Gradients(blocks=grads, inputs=inputs)
    result.check_finite()
    return loss, result


class _PassCache:
    """Encodes and forwards each distinct text of a batch once."""

    def __init__(self, model: QmwfModel, encoder: SentenceEncoder) -> None:
        self.model = model
        self.encoder = encoder
        self.entries: dict[str, tuple[EncodedSentence, SentencePass]] = {}

    def values(self, text: str) -> np.ndarray:
        if text not in self.entries:
            encoded = self.encoder.encode(text)
            self.entries[text] = (encoded, forward_pass(self.model, encoded.rows))
        return self.entries[text][1].values


def batch_loss(model: QmwfModel, encoder: SentenceEncoder, triplets: Iterable[Triplet], hp: HyperParams) -> float:
    """Mean hinge over triplets plus the L2 penalty of all trainable blocks."""
    cache = _PassCache(model, encoder)
    losses = []
    for q, pos, neg in triplets:
        uq = cache.values(q)
        losses.append(pairwise_hinge_loss(float(uq @ cache.values(pos)), float(uq @ cache.values(neg)), hp.margin))
    params = {**model.params(), **encoder.params()}
    penalty = sum(0.5 * hp.l2_lambda * float(np.sum(p * p)) for p in params.values())
    return float(np.mean(losses)) + penalty


def batch_backward(
    model: QmwfModel,
    encoder: SentenceEncoder,
    triplets: list[Triplet],
    hp: HyperParams,
) -> tuple[float, Gradients]:
    """
    Loss and gradients of a batch of triplets, including encoder parameters.

    Score gradients are first collected per distinct sentence in first-seen
    order, then each sentence is backpropagated once, so the result does
    not depend on anything but the triplet order.

    Returns:
        (mean hinge + L2 penalty, gradients of every trainable block)

    Raises:
        GradientError: If any gradient is non-finite
    """
    cache = _PassCache(model, encoder)
    d_values: dict[str, np.ndarray] = {}
    total = 0.0
    scale = 1.0 / len(triplets)

    for q, pos, neg in triplets:
        uq, up, un = cache.values(q), cache.values(pos), cache.values(neg)
        s_pos, s_neg = float(uq @ up), float(uq @ un)
        total += pairwise_hinge_loss(s_pos, s_neg, hp.margin)
        g_pos, g_neg = hinge_grad(s_pos, s_neg, hp.margin)
        if g_pos == 0.0 and g_neg == 0.0:
            continue
        for text, d in ((q, g_pos * up + g_neg * un), (pos, g_pos * uq), (neg, g_neg * uq)):
            d_values[text] = d_values[text] + d if text in d_values else d

    params = {**model.params(), **encoder.params()}
    grads = _zero_grads(params)
    for text, d in d_values.items():
        encoded, sp = cache.entries[text]
        d_rows = backward_pass(model, sp, scale * d, grads)
        encoder.backward(encoded, d_rows, grads)

    loss = total * scale + _add_l2(params, grads, hp.l2_lambda)
    result = Gradients(blocks=grads)
    result.check_finite()
    return loss, result
