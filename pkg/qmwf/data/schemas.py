"""QA dataset records."""

from dataclasses import dataclass, field
from typing import Iterator

from qmwf.diagnostics import Diagnostic


@dataclass(frozen=True)
class QAPair:
    """One candidate answer for a question, label 1 when correct."""

    question_id: str
    question_text: str
    answer_text: str
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class QuestionGroup:
    """All candidates of one question, in input order."""

    question_id: str
    question_text: str
    pairs: tuple[QAPair, ...]

    @property
    def labels(self) -> list[int]:
        return [p.label for p in self.pairs]

    @property
    def positives(self) -> list[QAPair]:
        return [p for p in self.pairs if p.label == 1]

    @property
    def negatives(self) -> list[QAPair]:
        return [p for p in self.pairs if p.label == 0]

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class Dataset:
    """A named split: question groups in deterministic input order."""

    split: str
    groups: tuple[QuestionGroup, ...]
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self) -> Iterator[QuestionGroup]:
        return iter(self.groups)

    @property
    def pair_count(self) -> int:
        return sum(len(g) for g in self.groups)

    def texts(self) -> Iterator[str]:
        """Every question and answer text, questions once per group."""
        for group in self.groups:
            yield group.question_text
            for pair in group.pairs:
                yield pair.answer_text

    def with_groups(self, groups: list[QuestionGroup], *extra: Diagnostic) -> "Dataset":
        return Dataset(split=self.split, groups=tuple(groups), diagnostics=self.diagnostics + tuple(extra))
