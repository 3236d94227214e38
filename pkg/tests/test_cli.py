import json
import logging
import runpy
import sys

import numpy as np
import pytest

from qmwf.cli import main
from qmwf.cli.commands import initial_state
from qmwf.cli.run import configure_logging
from qmwf.config import get_settings
from qmwf.data import Dataset, filter_no_positive, load_tsv
from qmwf.embedding import EmbeddingTable
from qmwf.errors import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, EXIT_VERIFICATION
from qmwf.eval import score_dataset, summarize
from qmwf.network import load_checkpoint
from qmwf.tensor import tensor_product


def write_dataset(path, dataset: Dataset):
    with open(path, "w", encoding="utf-8") as fh:
        for group in dataset:
            for pair in group.pairs:
                fh.write(f"{pair.question_id}\t{pair.question_text}\t{pair.answer_text}\t{pair.label}\n")
    return path


def write_embeddings(path, table: EmbeddingTable):
    """GloVe text format, special rows left out."""
    with open(path, "w", encoding="utf-8") as fh:
        for token in table.vocab.tokens[2:]:
            fh.write(token + " " + " ".join(f"{v:.17g}" for v in table.vector(token)) + "\n")
    return path


@pytest.fixture
def small_config(write_lines):
    return write_lines(
        "qmwf.env",
        [
            "QMWF_VERIFY_ORACLE_INSTANCES=50",
            "QMWF_VERIFY_GRAD_CONFIGS=2",
            "QMWF_VERIFY_ALS_SEEDS=2",
            "QMWF_MAX_POSITIONS=4",
        ],
    )


@pytest.fixture
def corpus(planted, tmp_path):
    return {
        "train": write_dataset(tmp_path / "train.tsv", planted.train),
        "dev": write_dataset(tmp_path / "dev.tsv", planted.dev),
        "embeddings": write_embeddings(tmp_path / "vectors.txt", planted.table),
    }


@pytest.fixture
def trained(corpus, small_config, tmp_path):
    checkpoint = tmp_path / "model.qmwf"
    code = main(
        [
            "train",
            "--train", str(corpus["train"]),
            "--dev", str(corpus["dev"]),
            "--embeddings", str(corpus["embeddings"]),
            "--checkpoint", str(checkpoint),
            "--config", str(small_config),
            "--channels", "4",
            "--epochs", "2",
            "--lr", "0.01",
            "--batch", "16",
            "--no-log-pool",
        ]
    )
    assert code == EXIT_OK
    return checkpoint


def test_verify_passes(small_config, capsys):
    assert main(["verify", "--config", str(small_config)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Checks passed: 6/6" in out
    assert "[FAIL]" not in out


def test_verify_with_injected_fault_fails(small_config, tmp_path, capsys):
    replay = tmp_path / "replay.json"
    code = main(["verify", "--config", str(small_config), "--inject-fault", "kernel", "--replay", str(replay)])
    assert code == EXIT_VERIFICATION
    assert "[FAIL] oracle_identity" in capsys.readouterr().out
    payload = json.loads(replay.read_text())
    assert payload["fault"] == "kernel"
    assert [f["name"] for f in payload["failures"]] == ["oracle_identity"]


def test_train_writes_checkpoint_and_history(capsys, trained):
    assert trained.exists()
    history = trained.with_suffix(".history.jsonl").read_text().splitlines()
    assert len(history) == 3
    assert json.loads(history[0])["epoch"] == 0
    assert "Best dev MAP" in capsys.readouterr().out


def test_eval_reports_model_and_baselines(trained, corpus, tmp_path, capsys):
    output = tmp_path / "metrics.jsonl"
    code = main(["eval", "--checkpoint", str(trained), "--test", str(corpus["dev"]), "--baselines", "--output", str(output)])
    assert code == EXIT_OK
    records = [json.loads(line) for line in output.read_text().splitlines()]
    assert [r["source"] for r in records] == ["model"] * 3 + ["random"] * 3 + ["untrained"] * 3
    assert all(0.0 <= r["value"] <= 1.0 for r in records)
    assert "untrained" in capsys.readouterr().out


def test_checkpoint_keeps_the_pre_training_state(trained, planted):
    ckpt = load_checkpoint(trained)
    model, encoder = initial_state(ckpt)
    assert model.config == ckpt.model.config
    for token in encoder.table.vocab.tokens[2:]:
        np.testing.assert_array_equal(encoder.table.vector(token), planted.table.vector(token))
    assert not np.allclose(encoder.table.matrix, ckpt.arrays["embeddings"])


def test_untrained_baseline_scores_the_pre_training_state(trained, corpus, tmp_path):
    output = tmp_path / "metrics.jsonl"
    assert main(["eval", "--checkpoint", str(trained), "--test", str(corpus["dev"]), "--baselines", "--output", str(output)]) == EXIT_OK
    records = [json.loads(line) for line in output.read_text().splitlines()]
    untrained = {r["metric"]: r["value"] for r in records if r["source"] == "untrained"}

    model, encoder = initial_state(load_checkpoint(trained))
    dev = filter_no_positive(load_tsv(corpus["dev"]))
    expected = summarize(score_dataset(model, encoder, dev))
    assert untrained == pytest.approx({name: expected[name] for name in untrained})


def test_train_is_reproducible(corpus, small_config, tmp_path):
    def run(name):
        checkpoint = tmp_path / name
        code = main(
            [
                "train",
                "--train", str(corpus["train"]),
                "--dev", str(corpus["dev"]),
                "--embeddings", str(corpus["embeddings"]),
                "--checkpoint", str(checkpoint),
                "--config", str(small_config),
                "--channels", "4",
                "--epochs", "2",
                "--lr", "0.01",
                "--batch", "16",
                "--seed", "5",
            ]
        )
        assert code == EXIT_OK
        return checkpoint

    first, second = run("a.qmwf"), run("b.qmwf")
    assert first.with_suffix(".history.jsonl").read_bytes() == second.with_suffix(".history.jsonl").read_bytes()
    assert first.read_bytes() == second.read_bytes()


def test_repr_writes_one_line_per_sentence(trained, write_lines, tmp_path):
    sentences = write_lines("sentences.txt", ["topic1 topic2", "", "noise3 noise4 noise5"])
    output = tmp_path / "vectors.txt"
    assert main(["repr", "--checkpoint", str(trained), "--input", str(sentences), "--output", str(output)]) == EXIT_OK
    lines = output.read_text().splitlines()
    assert len(lines) == 2
    assert all(len(line.split()) == 4 for line in lines)


def test_repr_rejects_sentence_without_tokens(trained, write_lines):
    sentences = write_lines("sentences.txt", ["topic1", "?!"])
    assert main(["repr", "--checkpoint", str(trained), "--input", str(sentences)]) == EXIT_RUNTIME


def test_decompose_rank_one_tensor(tmp_path, capsys):
    path = tmp_path / "t.npy"
    np.save(path, tensor_product([np.array([1.0, 2.0, 0.5])] * 3).array)
    factors = tmp_path / "factors.npz"
    assert main(["decompose", "--tensor", str(path), "--rank", "1", "--output", str(factors)]) == EXIT_OK
    error = float(capsys.readouterr().out.split("Relative error:")[1].split()[0])
    assert error <= 1e-6
    assert np.load(factors)["factors"].shape == (1, 3, 3)


def test_decompose_text_tensor(write_lines, capsys):
    path = write_lines("t.txt", ["2 2", "1 0 0 1"])
    assert main(["decompose", "--tensor", str(path), "--rank", "2"]) == EXIT_OK
    assert "order 2, dim 2, rank 2" in capsys.readouterr().out


def test_convert_wikiqa(write_lines, tmp_path):
    src = write_lines(
        "WikiQA-test.tsv",
        [
            "QuestionID\tQuestion\tDocumentID\tDocumentTitle\tSentenceID\tSentence\tLabel",
            "Q9\twhat is a cave\tD9\tCave\tD9-0\tA cave is a hollow.\t1",
        ],
    )
    dst = tmp_path / "test.tsv"
    assert main(["convert", "--format", "wikiqa", "--input", str(src), "--output", str(dst)]) == EXIT_OK
    assert dst.read_text() == "Q9\twhat is a cave\tA cave is a hollow.\t1\n"


def test_sweep_writes_records_and_best_checkpoint(corpus, small_config, tmp_path, capsys):
    output = tmp_path / "sweep.jsonl"
    checkpoint = tmp_path / "best.qmwf"
    code = main(
        [
            "sweep",
            "--train", str(corpus["train"]),
            "--dev", str(corpus["dev"]),
            "--embeddings", str(corpus["embeddings"]),
            "--config", str(small_config),
            "--epochs", "1",
            "--lrs", "0.01", "0.001",
            "--batches", "16",
            "--l2s", "0",
            "--channel-list", "4",
            "--no-log-pool",
            "--output", str(output),
            "--checkpoint", str(checkpoint),
        ]
    )
    assert code == EXIT_OK
    records = [json.loads(line) for line in output.read_text().splitlines()]
    assert [r["learning_rate"] for r in records] == [0.01, 0.001]
    assert all(r["channels"] == 4 for r in records)
    assert "Grid points: 2" in capsys.readouterr().out
    assert main(["eval", "--checkpoint", str(checkpoint), "--test", str(corpus["dev"])]) == EXIT_OK


def test_missing_required_flag_is_a_usage_error(corpus):
    with pytest.raises(SystemExit) as excinfo:
        main(["train", "--train", str(corpus["train"]), "--checkpoint", "x.qmwf"])
    assert excinfo.value.code == EXIT_VALIDATION


def test_missing_input_file_is_a_validation_error(tmp_path, capsys):
    code = main(["eval", "--checkpoint", str(tmp_path / "none.qmwf"), "--test", str(tmp_path / "none.tsv")])
    assert code == EXIT_VALIDATION
    assert "--test" in capsys.readouterr().err


def test_invalid_flag_value_is_a_validation_error(corpus, tmp_path):
    code = main(
        ["train", "--train", str(corpus["train"]), "--dev", str(corpus["dev"]), "--checkpoint", str(tmp_path / "m"),
         "--patch-size", "5"]
    )
    assert code == EXIT_VALIDATION


def test_corrupt_checkpoint_is_a_runtime_error(corpus, tmp_path, capsys):
    bad = tmp_path / "bad.qmwf"
    bad.write_bytes(b"\0" * 64)
    assert main(["eval", "--checkpoint", str(bad), "--test", str(corpus["dev"])]) == EXIT_RUNTIME
    assert "[ERROR] --checkpoint" in capsys.readouterr().err


@pytest.fixture
def root_logger():
    logger = logging.getLogger()
    level = logger.level
    yield logger
    logger.setLevel(level)


def test_log_level_comes_from_config_file(root_logger, write_lines):
    config = write_lines("quiet.env", ["QMWF_LOG_LEVEL=WARNING"])
    configure_logging(0, str(config))
    assert root_logger.level == logging.WARNING


def test_verbose_flag_overrides_config_log_level(root_logger, write_lines):
    config = write_lines("quiet.env", ["QMWF_LOG_LEVEL=ERROR"])
    configure_logging(1, str(config))
    assert root_logger.level == logging.DEBUG


def test_invalid_config_logs_at_default_level_and_fails_the_command(root_logger, write_lines):
    config = write_lines("bad.env", ["QMWF_CHANNELS=many"])
    configure_logging(0, str(config))
    assert root_logger.level == getattr(logging, get_settings().log_level.upper())
    assert main(["verify", "--config", str(config)]) == EXIT_VALIDATION


def test_package_runs_as_module(write_lines, tmp_path, monkeypatch):
    src = write_lines(
        "WikiQA-dev.tsv",
        [
            "QuestionID\tQuestion\tDocumentID\tDocumentTitle\tSentenceID\tSentence\tLabel",
            "Q1\twho wrote it\tD1\tBook\tD1-0\tShe wrote it.\t1",
        ],
    )
    dst = tmp_path / "dev.tsv"
    monkeypatch.setattr(sys, "argv", ["qmwf", "convert", "--format", "wikiqa", "--input", str(src), "--output", str(dst)])
    with pytest.raises(SystemExit) as excinfo:
        runpy.run_module("qmwf", run_name="__main__")
    assert excinfo.value.code == EXIT_OK
    assert dst.read_text() == "Q1\twho wrote it\tShe wrote it.\t1\n"
