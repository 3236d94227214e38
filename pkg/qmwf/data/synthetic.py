"""Planted, separable QA data for learnability checks."""

from dataclasses import dataclass

import numpy as np

from qmwf.data.schemas import Dataset, QAPair, QuestionGroup
from qmwf.embedding.table import EmbeddingTable
from qmwf.embedding.vocab import Vocabulary
from qmwf.rng import SAMPLING, substream


@dataclass(frozen=True)
class PlantedData:
    """Train/dev splits plus the embedding table their words come from."""

    train: Dataset
    dev: Dataset
    table: EmbeddingTable
    direction: np.ndarray


def planted_data(
    n_train: int = 200,
    n_dev: int = 50,
    negatives: int = 4,
    dim: int = 8,
    sentence_length: int = 4,
    topic_words: int = 40,
    noise_words: int = 200,
    noise: float = 0.1,
    seed: int = 0,
) -> PlantedData:
    """
    Build QA splits where relevance is carried by one planted direction.

    Topic words are the planted unit direction plus Gaussian noise; noise
    words are isotropic in the complement of that direction. Questions and
    their single correct answer use topic words, the ``negatives`` wrong
    answers use noise words only.

    Args:
        n_train: Questions in the train split
        n_dev: Questions in the dev split
        negatives: Wrong answers per question
        dim: Embedding dimension M
        sentence_length: Words per question and per answer
        topic_words: Size of the planted-direction vocabulary
        noise_words: Size of the noise vocabulary
        noise: Standard deviation of topic-word noise
        seed: Root seed

    Returns:
        PlantedData
    """
    rng = substream(seed, SAMPLING)
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)

    topic = [f"topic{i}" for i in range(topic_words)]
    filler = [f"noise{i}" for i in range(noise_words)]
    vocab = Vocabulary(topic + filler)
    matrix = np.zeros((len(vocab), dim))
    matrix[2 : 2 + topic_words] = direction + noise * rng.standard_normal((topic_words, dim))
    filler_rows = rng.standard_normal((noise_words, dim))
    matrix[2 + topic_words :] = filler_rows - np.outer(filler_rows @ direction, direction)
    matrix[0] = matrix[2:].mean(axis=0)
    table = EmbeddingTable(vocab=vocab, matrix=matrix)

    def sentence(words: list[str]) -> str:
        return " ".join(rng.choice(words, size=sentence_length))

    def split(name: str, count: int, offset: int) -> Dataset:
        groups = []
        for i in range(count):
            qid = f"{name}{offset + i}"
            question = sentence(topic)
            pairs = [QAPair(qid, question, sentence(topic), 1)]
            pairs += [QAPair(qid, question, sentence(filler), 0) for _ in range(negatives)]
            groups.append(QuestionGroup(qid, question, tuple(pairs)))
        return Dataset(split=name, groups=tuple(groups))

    return PlantedData(
        train=split("train", n_train, 0),
        dev=split("dev", n_dev, n_train),
        table=table,
        direction=direction,
    )
