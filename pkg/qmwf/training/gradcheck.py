"""Central finite-difference checks of the analytic gradients."""

import logging
from typing import Callable

import numpy as np

from qmwf.embedding.encoder import SentenceEncoder
from qmwf.network.layers import SentenceInput, sentence_rows
from qmwf.network.model import QmwfModel
from qmwf.training.backward import Triplet, backward, batch_backward, batch_loss, forward_pass
from qmwf.training.hyper import HyperParams
from qmwf.training.loss import pairwise_hinge_loss

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
GRAD_TOL = 1e-4


def numerical_gradient(f: Callable[[], float], param: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central differences of f w.r.t. every entry of ``param``, perturbed in place and restored."""
    grad = np.zeros_like(param)
    for idx in np.ndindex(param.shape):
        original = param[idx]
        param[idx] = original + h
        f_plus = f()
        param[idx] = original - h
        f_minus = f()
        param[idx] = original
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """‖a − n‖∞ / max(‖n‖∞, ‖a‖∞, 1e-12)."""
    if analytic.size == 0:
        return 0.0
    scale = max(float(np.max(np.abs(numeric))), float(np.max(np.abs(analytic))), 1e-12)
    return float(np.max(np.abs(analytic - numeric))) / scale


def _active_margin(scores: list[tuple[float, float]]) -> float:
    """A margin that keeps every hinge strictly active, away from its kink."""
    return max(abs(s_pos - s_neg) for s_pos, s_neg in scores) + 1.0


def check_triplet_gradients(
    model: QmwfModel,
    q: SentenceInput,
    a_pos: SentenceInput,
    a_neg: SentenceInput,
    hp: HyperParams,
    h: float = FD_STEP,
) -> dict[str, float]:
    """
    Relative error of every model block and every input matrix.

    The margin is raised so the hinge is active; the model is restored
    after each perturbation.

    Returns:
        Relative error by block name ("kernels", "out_weights",
        "input.question", "input.positive", "input.negative")
    """
    rows = {
        "question": sentence_rows(q).copy(),
        "positive": sentence_rows(a_pos).copy(),
        "negative": sentence_rows(a_neg).copy(),
    }

    def scores() -> tuple[float, float]:
        uq, up, un = (forward_pass(model, rows[k]).values for k in ("question", "positive", "negative"))
        return float(uq @ up), float(uq @ un)

    hp = hp.model_copy(update={"margin": _active_margin([scores()])})
    _, grads = backward(model, rows["question"], rows["positive"], rows["negative"], hp)

    def loss() -> float:
        s_pos, s_neg = scores()
        penalty = sum(0.5 * hp.l2_lambda * float(np.sum(p * p)) for p in model.params().values())
        return pairwise_hinge_loss(s_pos, s_neg, hp.margin) + penalty

    errors = {name: relative_error(grads[name], numerical_gradient(loss, p, h)) for name, p in model.params().items()}
    for name, r in rows.items():
        errors[f"input.{name}"] = relative_error(grads.inputs[name], numerical_gradient(loss, r, h))
    logger.debug("Triplet gradient errors: %s", errors)
    return errors


def check_batch_gradients(
    model: QmwfModel,
    encoder: SentenceEncoder,
    triplets: list[Triplet],
    hp: HyperParams,
    h: float = FD_STEP,
) -> dict[str, float]:
    """Relative error of every model and encoder block over a batch."""
    scores = []
    for q, pos, neg in triplets:
        uq, up, un = (forward_pass(model, encoder.encode(t).rows).values for t in (q, pos, neg))
        scores.append((float(uq @ up), float(uq @ un)))
    hp = hp.model_copy(update={"margin": _active_margin(scores)})

    _, grads = batch_backward(model, encoder, triplets, hp)
    params = {**model.params(), **encoder.params()}
    errors = {
        name: relative_error(grads[name], numerical_gradient(lambda: batch_loss(model, encoder, triplets, hp), p, h))
        for name, p in params.items()
    }
    logger.debug("Batch gradient errors: %s", errors)
    return errors
