"""Epoch loop with seeded shuffling, Adam updates and best-dev model selection."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Union

from pydantic import BaseModel, Field

from qmwf import diagnostics
from qmwf.data.schemas import Dataset
from qmwf.embedding import encoder_from_state
from qmwf.embedding.encoder import SentenceEncoder
from qmwf.errors import DataLoadError
from qmwf.eval.metrics import summarize
from qmwf.eval.scoring import score_dataset
from qmwf.network.model import QmwfModel
from qmwf.rng import SHUFFLE, substream
from qmwf.training.backward import Triplet, batch_backward
from qmwf.training.hyper import HyperParams
from qmwf.training.optimizer import AdamState, adam_step

logger = logging.getLogger(__name__)


class EpochRecord(BaseModel):
    """One line of the metric history; epoch 0 is the untrained model."""

    epoch: int = Field(ge=0)
    train_loss: Optional[float] = Field(None, description="Mean batch loss, None before training")
    dev_map: float
    dev_mrr: float
    dev_p_at_1: float
    best: bool = Field(description="Dev MAP strictly improved on every earlier epoch")


@dataclass
class TrainResult:
    """Best-dev model and encoder plus the per-epoch history."""

    model: QmwfModel
    encoder: SentenceEncoder
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    skipped_questions: int = 0

    @property
    def best(self) -> EpochRecord:
        return self.history[self.best_epoch]


def build_triplets(dataset: Dataset) -> tuple[list[Triplet], int]:
    """
    Every (question, correct answer, wrong answer) combination, in input order.

    Returns:
        (triplets, number of questions skipped for lacking a correct or a wrong answer)
    """
    triplets: list[Triplet] = []
    skipped = 0
    for group in dataset:
        positives, negatives = group.positives, group.negatives
        if not positives or not negatives:
            skipped += 1
            continue
        for pos in positives:
            for neg in negatives:
                triplets.append((group.question_text, pos.answer_text, neg.answer_text))
    return triplets, skipped


def _clone_encoder(encoder: SentenceEncoder) -> SentenceEncoder:
    meta, arrays = encoder.state()
    return encoder_from_state(meta, {name: a.copy() for name, a in arrays.items()})


def evaluate_dev(model: QmwfModel, encoder: SentenceEncoder, dev_set: Dataset) -> dict[str, float]:
    return summarize(score_dataset(model, encoder, dev_set))


def train(
    train_set: Dataset,
    dev_set: Dataset,
    model: QmwfModel,
    encoder: SentenceEncoder,
    hp: HyperParams,
    history_path: Optional[Union[str, Path]] = None,
    on_epoch: Optional[Callable[[EpochRecord], Any]] = None,
) -> TrainResult:
    """
    Train with pairwise hinge loss and keep the model with the best dev MAP.

    The inputs are not modified: training runs on copies of the model and
    encoder. Each epoch shuffles all triplets with the "shuffle" substream,
    takes Adam steps on consecutive batches and scores the dev split. The
    untrained model is recorded as epoch 0; a later epoch replaces the best
    model only when its dev MAP is strictly greater.

    Args:
        train_set: Training split
        dev_set: Split used for model selection
        model: Initial model
        encoder: Text encoder; its trainable blocks are updated too
        hp: Hyperparameters
        history_path: Write the history here as JSON lines, one per epoch
        on_epoch: Called with each epoch record

    Returns:
        TrainResult

    Raises:
        DataLoadError: If no training question has both a correct and a
            wrong answer, or the dev split has no rankable question
        GradientError: If a gradient becomes non-finite
    """
    triplets, skipped = build_triplets(train_set)
    diagnostics.emit("train", "skipped_questions", skipped, path=train_set.split, warn=True)
    if not triplets:
        raise DataLoadError(f"no question in {train_set.split} has both a correct and a wrong answer")
    if not any(g.positives for g in dev_set):
        raise DataLoadError(f"no question in {dev_set.split} has a correct answer to rank")

    model = model.copy()
    encoder = _clone_encoder(encoder)
    params = {**model.params(), **encoder.params()}
    state = AdamState.for_params(params)
    rng = substream(hp.seed, SHUFFLE)

    history: list[EpochRecord] = []
    sink = open(history_path, "w", encoding="utf-8") if history_path else None
    best_model, best_encoder, best_epoch, best_map = model.copy(), _clone_encoder(encoder), 0, -1.0

    try:
        for epoch in range(hp.epochs + 1):
            train_loss = None
            if epoch > 0:
                order = rng.permutation(len(triplets))
                weighted = 0.0
                for start in range(0, len(order), hp.batch_size):
                    batch = [triplets[i] for i in order[start : start + hp.batch_size]]
                    loss, grads = batch_backward(model, encoder, batch, hp)
                    adam_step(state, params, grads.blocks, hp.learning_rate)
                    weighted += loss * len(batch)
                train_loss = weighted / len(triplets)

            metrics = evaluate_dev(model, encoder, dev_set)
            improved = metrics["map"] > best_map
            if improved:
                best_model, best_encoder, best_epoch, best_map = model.copy(), _clone_encoder(encoder), epoch, metrics["map"]

            record = EpochRecord(
                epoch=epoch,
                train_loss=train_loss,
                dev_map=metrics["map"],
                dev_mrr=metrics["mrr"],
                dev_p_at_1=metrics["p@1"],
                best=improved,
            )
            history.append(record)
            if sink:
                sink.write(record.model_dump_json() + "\n")
                sink.flush()
            logger.info(
                "epoch %d loss=%s dev MAP=%.4f MRR=%.4f P@1=%.4f",
                epoch,
                "-" if train_loss is None else f"{train_loss:.6f}",
                record.dev_map,
                record.dev_mrr,
                record.dev_p_at_1,
            )
            if on_epoch:
                on_epoch(record)
    finally:
        if sink:
            sink.close()

    return TrainResult(
        model=best_model,
        encoder=best_encoder,
        history=history,
        best_epoch=best_epoch,
        skipped_questions=skipped,
    )
