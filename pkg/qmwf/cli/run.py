"""CLI entry point.

Usage:
    qmwf verify
    qmwf train --train train.tsv --dev dev.tsv --embeddings glove.6B.300d.txt --checkpoint model.qmwf
    qmwf eval --checkpoint model.qmwf --test test.tsv --baselines
    qmwf repr --checkpoint model.qmwf --input sentences.txt --output vectors.txt
    qmwf decompose --tensor t.npy --rank 3
    qmwf convert --format wikiqa --input WikiQA-train.tsv --output train.tsv
    qmwf sweep --train train.tsv --dev dev.tsv --channel-list 20 50 100

Also runnable as ``python -m qmwf``.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from qmwf import __version__
from qmwf.cli.commands import COMMANDS, RunConfig
from qmwf.config import get_settings, load_settings_file, validated
from qmwf.errors import EXIT_VALIDATION, ConfigValidationError, QmwfError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"[ERROR] {message}", file=sys.stderr)
        sys.exit(EXIT_VALIDATION)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Key-value settings file (QMWF_* keys)")
    common.add_argument("--seed", type=int, help="Root seed of all random substreams")
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    noise.add_argument("-q", "--quiet", action="store_true", help="Warnings only")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--neg-k", type=int, help="Resample k negatives per question from the split's answers")
    data.add_argument("--length-filter", action="store_true", help="Keep pairs with 5-50 tokens per side")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--embeddings", help="Pretrained vectors (GloVe/word2vec text format)")
    model.add_argument("--embed-dim", type=int, help="Embedding dimension (default: read from --embeddings)")
    model.add_argument("--freeze-embeddings", action="store_true", help="Do not update word vectors")
    model.add_argument("--input-mode", choices=["word", "char"], default="word")
    model.add_argument("--charset", help="Charset file for --input-mode char")
    model.add_argument("--channels", type=int, help="Convolution channels R")
    model.add_argument("--patch-size", type=int, help="Words per convolution window (1-3)")
    model.add_argument("--shared-kernels", action=argparse.BooleanOptionalAction, default=None)
    model.add_argument("--log-pool", action=argparse.BooleanOptionalAction, default=None)
    model.add_argument("--lr", type=float, help="Adam learning rate")
    model.add_argument("--batch", type=int, help="Triplets per update")
    model.add_argument("--l2", type=float, help="L2 weight")
    model.add_argument("--epochs", type=int)
    model.add_argument("--margin", type=float, help="Hinge margin")

    parser = _Parser(prog="qmwf", description="Quantum many-body wave function language model for answer selection")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", parents=[common], help="Run the property suite")
    p.add_argument("--inject-fault", choices=["kernel"], help="Perturb kernels to check that the suite fails")
    p.add_argument("--replay", help="Where failing instances are written")

    p = sub.add_parser("train", parents=[common, data, model], help="Train with best-dev selection")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--checkpoint", required=True, help="Output checkpoint")
    p.add_argument("--history", help="Metric history (default: next to the checkpoint)")

    p = sub.add_parser("eval", parents=[common, data], help="MAP/MRR/P@1 of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--baselines", action="store_true", help="Also report random-score and untrained baselines")
    p.add_argument("--output", help="Write metric records as JSON lines")

    p = sub.add_parser("repr", parents=[common], help="Sentence representations of a text file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="One sentence per line")
    p.add_argument("--output", help="Default: stdout")

    p = sub.add_parser("decompose", parents=[common], help="CP-ALS fit of a tensor file")
    p.add_argument("--tensor", required=True, help=".npy array or text file")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--output", help="Write weights and factors (.npz)")

    p = sub.add_parser("convert", parents=[common], help="WikiQA / TREC-QA to the normalized TSV")
    p.add_argument("--format", choices=["wikiqa", "trecqa"], required=True)
    p.add_argument("--input", required=True, help="WikiQA TSV file or TREC-QA directory")
    p.add_argument("--output", required=True)

    p = sub.add_parser("sweep", parents=[common, data, model], help="Grid search over hyperparameters")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--lrs", type=float, nargs="+")
    p.add_argument("--batches", type=int, nargs="+")
    p.add_argument("--l2s", type=float, nargs="+")
    p.add_argument("--channel-list", type=int, nargs="+")
    p.add_argument("--checkpoint", help="Write the best model here")
    p.add_argument("--output", help="Write one JSON record per grid point")
    return parser


def configure_logging(verbosity: int, config: Optional[str] = None) -> None:
    """Root log level from -v/-q, else from QMWF_LOG_LEVEL of --config and the environment."""
    if verbosity > 0:
        level = logging.DEBUG
    elif verbosity < 0:
        level = logging.WARNING
    else:
        try:
            settings = load_settings_file(Path(config) if config else None)
        except ConfigValidationError:
            # the command reports the bad file; log at the default level meanwhile
            settings = get_settings()
        level = getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse flags, run one command and return its exit code."""
    args = vars(build_parser().parse_args(argv))
    verbose, quiet = args.pop("verbose"), args.pop("quiet")
    verbosity = 1 if verbose else -1 if quiet else 0
    configure_logging(verbosity, args.get("config"))

    try:
        cfg = validated(RunConfig, verbosity=verbosity, **{k: v for k, v in args.items() if v is not None})
        return COMMANDS[cfg.command](cfg)
    except QmwfError as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return exc.exit_code
