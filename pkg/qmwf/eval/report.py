"""Metric records, report tables and reference baselines."""

from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from qmwf.eval.metrics import RankedCandidates, summarize
from qmwf.rng import BASELINE, substream

METRICS = ("map", "mrr", "p@1")


class MetricRecord(BaseModel):
    """One metric value of one split, as written to line-delimited reports."""

    metric: str = Field(description="map, mrr or p@1")
    split: str
    value: float = Field(ge=0.0, le=1.0)
    seed: int
    source: str = Field("model", description="model, random or untrained")


def metric_records(summary: dict[str, float], split: str, seed: int, source: str = "model") -> list[MetricRecord]:
    return [MetricRecord(metric=m, split=split, value=summary[m], seed=seed, source=source) for m in METRICS]


def format_table(records: Sequence[MetricRecord]) -> str:
    """Human-readable table: one row per (source, split), one column per metric."""
    rows: dict[tuple[str, str], dict[str, float]] = {}
    for rec in records:
        rows.setdefault((rec.source, rec.split), {})[rec.metric] = rec.value

    header = f"{'source':<12}{'split':<12}" + "".join(f"{m.upper():>10}" for m in METRICS)
    lines = [header, "-" * len(header)]
    for (source, split), values in rows.items():
        cells = "".join(f"{values[m]:>10.4f}" if m in values else f"{'-':>10}" for m in METRICS)
        lines.append(f"{source:<12}{split:<12}{cells}")
    return "\n".join(lines)


def write_records(path: Union[str, Path], records: Iterable[BaseModel], append: bool = False) -> None:
    """Write records as JSON lines."""
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.model_dump_json() + "\n")


def random_score_baseline(groups: Sequence[RankedCandidates], trials: int = 50, seed: int = 0) -> dict[str, float]:
    """
    Expected metrics of uniform random scoring.

    Each trial draws fresh uniform scores for every candidate from the
    "baseline" substream; metrics are averaged over trials.

    Args:
        groups: Scored groups; only their labels are used
        trials: Number of simulations
        seed: Root seed
    """
    rng = substream(seed, BASELINE)
    totals = dict.fromkeys(METRICS, 0.0)
    for _ in range(trials):
        shuffled = [
            RankedCandidates(g.question_id, rng.random(g.labels.size), g.labels) for g in groups
        ]
        for name, value in summarize(shuffled).items():
            totals[name] += value
    return {name: total / trials for name, total in totals.items()}


def label_oracle(groups: Sequence[RankedCandidates]) -> list[RankedCandidates]:
    """Groups rescored with their own labels: a perfect ranking."""
    return [RankedCandidates(g.question_id, g.labels.astype(np.float64), g.labels) for g in groups]
