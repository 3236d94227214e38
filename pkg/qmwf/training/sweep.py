"""Grid search over learning rate, batch size, L2 weight and channel count."""

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from pydantic import BaseModel

from qmwf.data.schemas import Dataset
from qmwf.embedding.encoder import SentenceEncoder
from qmwf.network.config import QmwfConfig
from qmwf.network.model import QmwfModel
from qmwf.rng import INIT, substream
from qmwf.training.hyper import BATCH_SIZES, L2_LAMBDAS, LEARNING_RATES, HyperParams
from qmwf.training.trainer import TrainResult, train

logger = logging.getLogger(__name__)


class SweepRecord(BaseModel):
    """Best dev metrics of one grid point."""

    learning_rate: float
    batch_size: int
    l2_lambda: float
    channels: int
    best_epoch: int
    dev_map: float
    dev_mrr: float
    dev_p_at_1: float


@dataclass
class SweepResult:
    records: list[SweepRecord]
    best: SweepRecord
    best_result: TrainResult


def sweep(
    train_set: Dataset,
    dev_set: Dataset,
    config: QmwfConfig,
    encoder: SentenceEncoder,
    base: HyperParams,
    learning_rates: Sequence[float] = LEARNING_RATES,
    batch_sizes: Sequence[int] = BATCH_SIZES,
    l2_lambdas: Sequence[float] = L2_LAMBDAS,
    channels: Optional[Sequence[int]] = None,
    on_point: Optional[Callable[[SweepRecord], object]] = None,
) -> SweepResult:
    """
    Train once per grid point and pick the point with the best dev MAP.

    Every point starts from a model initialized with the "init" substream
    of ``base.seed`` and from the same encoder state; ties keep the
    earlier point.
    """
    records: list[SweepRecord] = []
    best: Optional[tuple[SweepRecord, TrainResult]] = None
    grid = itertools.product(channels or [config.channels], learning_rates, batch_sizes, l2_lambdas)
    for r, lr, batch, l2 in grid:
        cfg = config.model_copy(update={"channels": r})
        model = QmwfModel.initialize(cfg, substream(base.seed, INIT))
        hp = base.model_copy(update={"learning_rate": lr, "batch_size": batch, "l2_lambda": l2})
        result = train(train_set, dev_set, model, encoder, hp)
        top = result.best
        record = SweepRecord(
            learning_rate=lr,
            batch_size=batch,
            l2_lambda=l2,
            channels=r,
            best_epoch=result.best_epoch,
            dev_map=top.dev_map,
            dev_mrr=top.dev_mrr,
            dev_p_at_1=top.dev_p_at_1,
        )
        records.append(record)
        logger.info("sweep point %s", record.model_dump_json())
        if on_point:
            on_point(record)
        if best is None or record.dev_map > best[0].dev_map:
            best = (record, result)

    if best is None:
        raise ValueError("empty sweep grid")
    return SweepResult(records=records, best=best[0], best_result=best[1])
