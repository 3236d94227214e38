"""Ranking evaluation: MAP, MRR and P@1."""

from qmwf.eval.metrics import (
    RankedCandidates,
    average_precision,
    mean_average_precision,
    mean_reciprocal_rank,
    p_at_1,
    reciprocal_rank,
    summarize,
)
from qmwf.eval.report import (
    METRICS,
    MetricRecord,
    format_table,
    label_oracle,
    metric_records,
    random_score_baseline,
    write_records,
)
from qmwf.eval.scoring import represent, score_dataset, score_pair

__all__ = [
    "RankedCandidates",
    "average_precision",
    "mean_average_precision",
    "mean_reciprocal_rank",
    "p_at_1",
    "reciprocal_rank",
    "summarize",
    "METRICS",
    "MetricRecord",
    "format_table",
    "label_oracle",
    "metric_records",
    "random_score_baseline",
    "write_records",
    "represent",
    "score_dataset",
    "score_pair",
]
