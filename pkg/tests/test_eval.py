import json

import numpy as np
import pytest

from qmwf.errors import DegenerateInputError, DimensionError
from qmwf.eval import (
    MetricRecord,
    RankedCandidates,
    average_precision,
    format_table,
    label_oracle,
    mean_average_precision,
    mean_reciprocal_rank,
    metric_records,
    p_at_1,
    random_score_baseline,
    reciprocal_rank,
    summarize,
    write_records,
)
from qmwf.verify import reference_metrics


def ranked(scores, labels, qid="q"):
    return RankedCandidates(qid, np.array(scores, dtype=float), np.array(labels))


def test_average_precision_of_interleaved_ranking():
    assert average_precision(ranked([3, 2, 1], [1, 0, 1])) == pytest.approx(0.8333, abs=1e-4)


def test_mean_reciprocal_rank():
    groups = [ranked([2, 1], [1, 0]), ranked([2, 1], [0, 1])]
    assert mean_reciprocal_rank(groups) == pytest.approx(0.75)


def test_single_correct_candidate_at_rank_three():
    r = ranked([3, 2, 1], [0, 0, 1])
    assert average_precision(r) == pytest.approx(1 / 3)
    assert reciprocal_rank(r) == pytest.approx(1 / 3)
    assert p_at_1([r]) == 0.0


def test_ties_keep_input_order():
    assert reciprocal_rank(ranked([1, 1, 1], [0, 1, 0])) == pytest.approx(0.5)
    assert p_at_1([ranked([1, 1], [1, 0])]) == 1.0
    assert p_at_1([ranked([1, 1], [0, 1])]) == 0.0


def test_group_without_correct_candidate_is_rejected():
    with pytest.raises(DegenerateInputError):
        ranked([1, 2], [0, 0])


@pytest.mark.parametrize(
    "scores,labels",
    [([1.0], [1, 0]), ([np.nan, 1.0], [1, 0]), ([1.0, 2.0], [1, 2]), ([], [])],
)
def test_invalid_groups_are_rejected(scores, labels):
    with pytest.raises(DimensionError):
        ranked(scores, labels)


def test_metrics_need_at_least_one_group():
    with pytest.raises(DimensionError):
        mean_average_precision([])


def test_perfect_ranking_scores_one(rng):
    groups = []
    for k in range(20):
        labels = rng.integers(0, 2, 6)
        labels[0] = 1
        groups.append(ranked(rng.random(6), labels, f"q{k}"))
    assert summarize(label_oracle(groups)) == {"map": 1.0, "mrr": 1.0, "p@1": 1.0}


def test_metrics_match_exhaustive_reference(rng):
    for _ in range(200):
        size = int(rng.integers(1, 8))
        labels = rng.integers(0, 2, size)
        labels[rng.integers(size)] = 1
        scores = rng.integers(0, 3, size).astype(float)
        r = ranked(scores, labels)
        ap, rr, top = reference_metrics(scores.tolist(), labels.tolist())
        assert average_precision(r) == pytest.approx(ap, abs=1e-15)
        assert reciprocal_rank(r) == rr
        assert p_at_1([r]) == top


def test_metrics_are_invariant_under_monotone_score_maps(rng):
    for _ in range(50):
        labels = rng.integers(0, 2, 7)
        labels[3] = 1
        scores = rng.standard_normal(7)
        base = summarize([ranked(scores, labels)])
        assert summarize([ranked(np.exp(2.0 * scores) + 5.0, labels)]) == base


def test_metric_ordering_invariants(rng):
    for _ in range(100):
        labels = rng.integers(0, 2, 5)
        labels[rng.integers(5)] = 1
        r = ranked(rng.random(5), labels)
        values = summarize([r])
        assert 0.0 <= values["p@1"] <= values["mrr"] <= 1.0
        assert 0.0 < values["map"] <= 1.0


def test_random_score_baseline_on_one_in_five_groups(rng):
    groups = []
    for k in range(400):
        labels = np.zeros(5, dtype=int)
        labels[rng.integers(5)] = 1
        groups.append(ranked(rng.random(5), labels, f"q{k}"))
    baseline = random_score_baseline(groups, trials=50, seed=0)
    assert baseline["p@1"] == pytest.approx(0.2, abs=0.01)
    assert baseline["mrr"] == pytest.approx((1 + 1 / 2 + 1 / 3 + 1 / 4 + 1 / 5) / 5, abs=0.01)
    assert random_score_baseline(groups, trials=5, seed=1) == random_score_baseline(groups, trials=5, seed=1)


def test_metric_records_and_table(tmp_path):
    records = metric_records({"map": 0.5, "mrr": 0.75, "p@1": 0.25}, split="test", seed=7)
    records += metric_records({"map": 0.1, "mrr": 0.2, "p@1": 0.0}, split="test", seed=7, source="random")
    assert [r.metric for r in records[:3]] == ["map", "mrr", "p@1"]

    table = format_table(records).splitlines()
    assert "MAP" in table[0] and "P@1" in table[0]
    assert table[2].split() == ["model", "test", "0.5000", "0.7500", "0.2500"]
    assert table[3].split()[0] == "random"

    path = tmp_path / "metrics.jsonl"
    write_records(path, records)
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert rows[1] == {"metric": "mrr", "split": "test", "value": 0.75, "seed": 7, "source": "model"}
    write_records(path, records[:1], append=True)
    assert len(path.read_text().splitlines()) == 7


def test_metric_record_value_range():
    with pytest.raises(ValueError):
        MetricRecord(metric="map", split="dev", value=1.5, seed=0)
