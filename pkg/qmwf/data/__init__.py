"""QA dataset ingestion, filtering and negative sampling."""

from qmwf.data.convert import convert_trecqa, convert_wikiqa
from qmwf.data.filters import filter_by_length, filter_no_positive, negative_sample
from qmwf.data.loader import group_pairs, load_tsv
from qmwf.data.schemas import Dataset, QAPair, QuestionGroup
from qmwf.data.synthetic import PlantedData, planted_data

__all__ = [
    "convert_trecqa",
    "convert_wikiqa",
    "filter_by_length",
    "filter_no_positive",
    "negative_sample",
    "group_pairs",
    "load_tsv",
    "Dataset",
    "QAPair",
    "QuestionGroup",
    "PlantedData",
    "planted_data",
]
