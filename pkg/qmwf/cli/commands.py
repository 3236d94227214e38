"""Command implementations behind the ``qmwf`` entry point."""

import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from qmwf.config import Settings, load_settings_file
from qmwf.data import (
    Dataset,
    convert_trecqa,
    convert_wikiqa,
    filter_by_length,
    filter_no_positive,
    load_tsv,
    negative_sample,
)
from qmwf.embedding import (
    CharEncoder,
    CharInput,
    DEFAULT_CHARSET,
    SentenceEncoder,
    WordEncoder,
    encoder_from_state,
    load_charset,
    load_embeddings,
    random_table,
    sniff_dim,
    tokenize,
)
from qmwf.errors import (
    EXIT_OK,
    CheckpointError,
    DataLoadError,
    DegenerateInputError,
    DimensionError,
    VerificationError,
)
from qmwf.eval import (
    MetricRecord,
    format_table,
    metric_records,
    random_score_baseline,
    represent,
    score_dataset,
    summarize,
    write_records,
)
from qmwf.network import Checkpoint, QmwfConfig, QmwfModel, load_checkpoint, save_checkpoint
from qmwf.rng import INIT, substream
from qmwf.tensor import DenseTensor, cp_als
from qmwf.textio import iter_lines, read_text
from qmwf.training import EpochRecord, HyperParams, SweepRecord, sweep, train
from qmwf.training.hyper import BATCH_SIZES, L2_LAMBDAS, LEARNING_RATES
from qmwf.verify import CheckResult, run_suite

logger = logging.getLogger(__name__)

Command = Literal["verify", "train", "eval", "repr", "decompose", "convert", "sweep"]

# Flags each command cannot run without
REQUIRED_FLAGS: dict[str, tuple[str, ...]] = {
    "verify": (),
    "train": ("train", "dev", "checkpoint"),
    "eval": ("checkpoint", "test"),
    "repr": ("checkpoint", "input"),
    "decompose": ("tensor", "rank"),
    "convert": ("input", "output", "format"),
    "sweep": ("train", "dev"),
}

# Path flags that must name existing files or directories
INPUT_PATHS = ("train", "dev", "test", "embeddings", "input", "tensor", "config", "charset")

BASELINE_TRIALS = 50

# Array name prefixes of the pre-training state in a checkpoint
INITIAL_MODEL = "initial.model."
INITIAL_ENCODER = "initial.encoder."


class RunConfig(BaseModel):
    """Parsed and cross-checked command-line flags."""

    command: Command
    config: Optional[Path] = Field(None, description="Key-value settings file")
    seed: Optional[int] = None
    verbosity: int = Field(0, ge=-1, le=1)

    # Paths
    train: Optional[Path] = None
    dev: Optional[Path] = None
    test: Optional[Path] = None
    embeddings: Optional[Path] = None
    checkpoint: Optional[Path] = None
    input: Optional[Path] = None
    output: Optional[Path] = None
    tensor: Optional[Path] = None
    history: Optional[Path] = None
    charset: Optional[Path] = None
    replay: Path = Path("verify-failures.json")

    # Data
    neg_k: Optional[int] = Field(None, ge=1)
    length_filter: bool = False
    format: Optional[Literal["wikiqa", "trecqa"]] = None

    # Model
    input_mode: Literal["word", "char"] = "word"
    embed_dim: Optional[int] = Field(None, ge=1)
    channels: Optional[int] = Field(None, ge=1)
    patch_size: Optional[int] = Field(None, ge=1, le=3)
    shared_kernels: Optional[bool] = None
    log_pool: Optional[bool] = None
    freeze_embeddings: bool = False

    # Training
    lr: Optional[float] = Field(None, gt=0.0)
    batch: Optional[int] = Field(None, ge=1)
    l2: Optional[float] = Field(None, ge=0.0)
    epochs: Optional[int] = Field(None, ge=1)
    margin: Optional[float] = Field(None, gt=0.0)

    # Sweep grid
    lrs: Optional[list[float]] = None
    batches: Optional[list[int]] = None
    l2s: Optional[list[float]] = None
    channel_list: Optional[list[int]] = None

    # Eval / verify / decompose
    baselines: bool = False
    inject_fault: Optional[Literal["kernel"]] = None
    rank: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _required_and_existing(self) -> "RunConfig":
        missing = [f"--{name.replace('_', '-')}" for name in REQUIRED_FLAGS[self.command] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"'{self.command}' requires {', '.join(missing)}")
        for name in INPUT_PATHS:
            path = getattr(self, name)
            if path is not None and not path.exists():
                raise ValueError(f"--{name} {path}: no such file or directory")
        return self

    def settings(self) -> Settings:
        return load_settings_file(self.config)

    def root_seed(self, settings: Settings) -> int:
        return settings.seed if self.seed is None else self.seed


def banner(title: str, with_time: bool = True) -> None:
    print("=" * 60)
    print(title)
    if with_time:
        print(f"Started at: {datetime.now().isoformat()}")
    print("=" * 60)
    print()


def load_split(flag: str, path: Path, cfg: RunConfig, settings: Settings, seed: int) -> Dataset:
    """
    Load one split and apply the data options.

    Questions without a correct answer are removed; with ``--length-filter``
    pairs outside 5-50 tokens are dropped; with ``--neg-k`` negatives are
    resampled from the split's answer pool (``QMWF_NEG_K`` sets a default).
    """
    try:
        dataset = filter_no_positive(load_tsv(path))
        if cfg.length_filter:
            dataset = filter_by_length(dataset)
        neg_k = cfg.neg_k if cfg.neg_k is not None else settings.neg_k
        if neg_k is not None:
            dataset = negative_sample(dataset, k=neg_k, seed=seed)
    except DataLoadError as exc:
        raise DataLoadError(f"--{flag} {path}: {exc}") from exc
    if not len(dataset):
        raise DataLoadError(f"--{flag} {path}: no usable questions")
    print(f"[OK] {flag}: {len(dataset)} questions, {dataset.pair_count} pairs from {path}")
    return dataset


def build_encoder(
    cfg: RunConfig,
    settings: Settings,
    splits: list[Dataset],
    rng: np.random.Generator,
) -> SentenceEncoder:
    """Word encoder over pretrained or random vectors, or a char encoder."""
    max_positions = settings.max_positions
    if cfg.input_mode == "char":
        charset = load_charset(cfg.charset) if cfg.charset else DEFAULT_CHARSET
        ci = CharInput(charset=charset, window=settings.char_window, pool=settings.char_pool)
        return CharEncoder.initialize(ci, cfg.embed_dim or settings.embed_dim, rng, max_positions=max_positions)

    vocab = {token for split in splits for text in split.texts() for token in tokenize(text)}
    trainable = not cfg.freeze_embeddings
    if cfg.embeddings is None:
        print(f"[WARN] No --embeddings given; using random {cfg.embed_dim or settings.embed_dim}-dim vectors")
        table = random_table(sorted(vocab), cfg.embed_dim or settings.embed_dim, rng, trainable=trainable)
    else:
        try:
            dim = cfg.embed_dim or sniff_dim(cfg.embeddings)
            table = load_embeddings(cfg.embeddings, dim, restrict_to=vocab, trainable=trainable)
        except DataLoadError as exc:
            raise DataLoadError(f"--embeddings {cfg.embeddings}: {exc}") from exc
        print(f"[OK] embeddings: {table.size - 2} vectors of dim {table.dim} from {cfg.embeddings}")
    return WordEncoder(table, max_positions=max_positions)


def model_config(cfg: RunConfig, settings: Settings, embed_dim: int) -> QmwfConfig:
    return QmwfConfig.from_settings(
        settings,
        embed_dim=embed_dim,
        channels=cfg.channels,
        patch_size=cfg.patch_size,
        shared_kernels=cfg.shared_kernels,
        log_domain=cfg.log_pool,
    )


def hyper_params(cfg: RunConfig, settings: Settings, seed: int) -> HyperParams:
    return HyperParams.from_settings(
        settings,
        learning_rate=cfg.lr,
        batch_size=cfg.batch,
        l2_lambda=cfg.l2,
        epochs=cfg.epochs,
        margin=cfg.margin,
        seed=seed,
    )


def write_checkpoint(
    path: Path,
    model: QmwfModel,
    encoder: SentenceEncoder,
    initial: tuple[QmwfModel, SentenceEncoder] | None = None,
    **meta: object,
) -> None:
    """Write the trained pair, plus the pre-training pair the untrained baseline scores with."""
    enc_meta, enc_arrays = encoder.state()
    arrays = dict(enc_arrays)
    if initial is not None:
        init_model, init_encoder = initial
        init_meta, init_arrays = init_encoder.state()
        arrays.update({f"{INITIAL_MODEL}{name}": value for name, value in init_model.params().items()})
        arrays.update({f"{INITIAL_ENCODER}{name}": value for name, value in init_arrays.items()})
        meta["initial_encoder"] = init_meta
    save_checkpoint(path, model, arrays=arrays, meta={"encoder": enc_meta, **meta})
    print(f"[OK] Checkpoint written to {path}")


def initial_state(ckpt: Checkpoint) -> tuple[QmwfModel, SentenceEncoder] | None:
    """The model and encoder as they were before training, None for checkpoints without them."""
    if "initial_encoder" not in ckpt.meta:
        return None
    try:
        model = QmwfModel(
            config=ckpt.model.config,
            kernels=ckpt.arrays[f"{INITIAL_MODEL}kernels"],
            out_weights=ckpt.arrays[f"{INITIAL_MODEL}out_weights"],
        )
        arrays = {
            name.removeprefix(INITIAL_ENCODER): value
            for name, value in ckpt.arrays.items()
            if name.startswith(INITIAL_ENCODER)
        }
        encoder = encoder_from_state(ckpt.meta["initial_encoder"], arrays)
    except KeyError as exc:
        raise CheckpointError(f"initial state is missing array {exc}") from exc
    return model, encoder


def open_checkpoint(path: Path) -> tuple[Checkpoint, SentenceEncoder]:
    """Load a checkpoint and the encoder stored with it."""
    try:
        ckpt = load_checkpoint(path)
        if "encoder" not in ckpt.meta:
            raise CheckpointError("no encoder stored")
        encoder = encoder_from_state(ckpt.meta["encoder"], ckpt.arrays)
    except (CheckpointError, KeyError) as exc:
        raise CheckpointError(f"--checkpoint {path}: {exc}") from exc
    if encoder.embed_dim != ckpt.model.config.embed_dim:
        raise DimensionError(
            f"--checkpoint {path}: encoder dim {encoder.embed_dim} does not match model dim "
            f"{ckpt.model.config.embed_dim}"
        )
    return ckpt, encoder


def print_epoch(record: EpochRecord) -> None:
    loss = "-" if record.train_loss is None else f"{record.train_loss:.6f}"
    marker = " *" if record.best else ""
    print(
        f"[TRAIN] epoch {record.epoch:>3}  loss {loss}  "
        f"dev MAP {record.dev_map:.4f}  MRR {record.dev_mrr:.4f}  P@1 {record.dev_p_at_1:.4f}{marker}"
    )


def cmd_verify(cfg: RunConfig) -> int:
    """Run the property suite; failing instances are written to the replay file."""
    settings = cfg.settings()
    seed = cfg.root_seed(settings)
    banner("QMWF VERIFY", with_time=False)
    print(f"Seed: {seed}")
    if cfg.inject_fault:
        print(f"[WARN] Injected fault: {cfg.inject_fault}")
    print("-" * 40)

    def report(result: CheckResult) -> None:
        tag = "[OK]" if result.passed else "[FAIL]"
        print(
            f"{tag} {result.name:<24} max error {result.max_error:.3e} "
            f"(tol {result.tolerance:.0e}, {result.instances} instances)"
        )

    results = run_suite(seed=seed, settings=settings, fault=cfg.inject_fault, on_check=report)
    failed = [r for r in results if not r.passed]

    print()
    print("=" * 60)
    print("SUMMARY")
    print(f"Checks passed: {len(results) - len(failed)}/{len(results)}")
    if failed:
        payload = {"seed": seed, "fault": cfg.inject_fault, "failures": [r.model_dump() for r in failed]}
        cfg.replay.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        print(f"Failing instances written to {cfg.replay}")
        print("=" * 60)
        raise VerificationError(f"{len(failed)} check(s) failed: {', '.join(r.name for r in failed)}")
    print("=" * 60)
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    """Train on --train, select on --dev, write the best checkpoint and the history."""
    settings = cfg.settings()
    seed = cfg.root_seed(settings)
    banner("QMWF TRAIN")

    train_set = load_split("train", cfg.train, cfg, settings, seed)
    dev_set = load_split("dev", cfg.dev, cfg, settings, seed)
    rng = substream(seed, INIT)
    encoder = build_encoder(cfg, settings, [train_set, dev_set], rng)
    config = model_config(cfg, settings, encoder.embed_dim)
    model = QmwfModel.initialize(config, rng)
    hp = hyper_params(cfg, settings, seed)
    history_path = cfg.history or cfg.checkpoint.with_suffix(".history.jsonl")

    print(f"Input mode: {cfg.input_mode}, channels: {config.channels}, patch: {config.patch_size}, "
          f"shared: {config.shared_kernels}, log pooling: {config.log_domain}")
    print(f"lr: {hp.learning_rate}, batch: {hp.batch_size}, l2: {hp.l2_lambda}, epochs: {hp.epochs}, seed: {seed}")
    print("-" * 40)

    result = train(train_set, dev_set, model, encoder, hp, history_path=history_path, on_epoch=print_epoch)
    write_checkpoint(
        cfg.checkpoint,
        result.model,
        result.encoder,
        initial=(model, encoder),
        hyper=hp.model_dump(),
        best_epoch=result.best_epoch,
        seed=seed,
    )

    print()
    print("=" * 60)
    print("SUMMARY")
    print(f"Best epoch: {result.best_epoch}")
    print(f"Best dev MAP: {result.best.dev_map:.4f}  MRR: {result.best.dev_mrr:.4f}  P@1: {result.best.dev_p_at_1:.4f}")
    print(f"Skipped training questions: {result.skipped_questions}")
    print(f"History: {history_path}")
    print(f"Finished at: {datetime.now().isoformat()}")
    print("=" * 60)
    return EXIT_OK


def cmd_eval(cfg: RunConfig) -> int:
    """MAP, MRR and P@1 of a checkpoint on --test, optionally against baselines."""
    settings = cfg.settings()
    seed = cfg.root_seed(settings)
    ckpt, encoder = open_checkpoint(cfg.checkpoint)
    test_set = load_split("test", cfg.test, cfg, settings, seed)

    ranked = score_dataset(ckpt.model, encoder, test_set)
    records: list[MetricRecord] = metric_records(summarize(ranked), test_set.split, seed)
    if cfg.baselines:
        records += metric_records(
            random_score_baseline(ranked, trials=BASELINE_TRIALS, seed=seed), test_set.split, seed, source="random"
        )
        try:
            initial = initial_state(ckpt)
        except CheckpointError as exc:
            raise CheckpointError(f"--checkpoint {cfg.checkpoint}: {exc}") from exc
        if initial is None:
            print("[WARN] Checkpoint has no pre-training state; untrained baseline uses a fresh model and the stored encoder")
            initial = (QmwfModel.initialize(ckpt.model.config, substream(seed, INIT)), encoder)
        untrained_model, untrained_encoder = initial
        records += metric_records(
            summarize(score_dataset(untrained_model, untrained_encoder, test_set)),
            test_set.split,
            seed,
            source="untrained",
        )

    print("[EVAL]")
    print(format_table(records))
    if cfg.output:
        write_records(cfg.output, records)
        print(f"[OK] Metric records written to {cfg.output}")
    return EXIT_OK


def cmd_repr(cfg: RunConfig) -> int:
    """One line of R space-separated values per non-blank input line."""
    ckpt, encoder = open_checkpoint(cfg.checkpoint)
    out = open(cfg.output, "w", encoding="utf-8") if cfg.output else sys.stdout
    written = 0
    try:
        for lineno, line in enumerate(iter_lines(cfg.input), start=1):
            if not line.strip():
                continue
            try:
                values = represent(ckpt.model, encoder, line).signed()
            except DegenerateInputError as exc:
                raise DegenerateInputError(f"--input {cfg.input} line {lineno}: {exc}") from exc
            out.write(" ".join(f"{v:.17g}" for v in values) + "\n")
            written += 1
    finally:
        if out is not sys.stdout:
            out.close()
    if cfg.output:
        print(f"[OK] {written} representations written to {cfg.output}")
    return EXIT_OK


def read_tensor(path: Path) -> DenseTensor:
    """
    Read a tensor file.

    ``.npy`` files hold an array with equal-length axes; text files start with
    an ``order dim`` line followed by dim**order whitespace-separated values
    in row-major order.
    """
    try:
        if path.suffix == ".npy":
            return DenseTensor.from_array(np.load(path))
        fields = read_text(path).split()
        order, dim = int(fields[0]), int(fields[1])
        return DenseTensor(order=order, dim=dim, data=np.array([float(v) for v in fields[2:]]))
    except (ValueError, IndexError, OSError) as exc:
        raise DataLoadError(f"--tensor {path}: {exc}") from exc


def cmd_decompose(cfg: RunConfig) -> int:
    """Fit rank-R CP factors to a tensor file and report the fit error."""
    settings = cfg.settings()
    seed = cfg.root_seed(settings)
    tensor = read_tensor(cfg.tensor)
    result = cp_als(tensor, rank=cfg.rank, seed=seed)
    print(f"[OK] order {tensor.order}, dim {tensor.dim}, rank {cfg.rank}")
    print(f"Relative error: {result.relative_error:.6e}")
    print(f"Sweeps: {result.iterations}")
    if result.regularized:
        print("[WARN] Ridge fallback was used for an ill-conditioned subproblem")
    if cfg.output:
        np.savez(cfg.output, weights=result.factors.weights, factors=result.factors.factors)
        print(f"[OK] Factors written to {cfg.output}")
    return EXIT_OK


def cmd_convert(cfg: RunConfig) -> int:
    """Native WikiQA / TREC-QA layout → normalized TSV."""
    if cfg.format == "wikiqa":
        rows = convert_wikiqa(cfg.input, cfg.output)
    else:
        rows = convert_trecqa(cfg.input, cfg.output)
    print(f"[OK] {rows} rows written to {cfg.output}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    """Grid search; one record per grid point, best model optionally checkpointed."""
    settings = cfg.settings()
    seed = cfg.root_seed(settings)
    banner("QMWF SWEEP")

    train_set = load_split("train", cfg.train, cfg, settings, seed)
    dev_set = load_split("dev", cfg.dev, cfg, settings, seed)
    encoder = build_encoder(cfg, settings, [train_set, dev_set], substream(seed, INIT))
    config = model_config(cfg, settings, encoder.embed_dim)
    base = hyper_params(cfg, settings, seed)
    if cfg.output:
        cfg.output.write_text("", encoding="utf-8")

    def report(record: SweepRecord) -> None:
        print(
            f"[SWEEP] R={record.channels} lr={record.learning_rate:g} batch={record.batch_size} "
            f"l2={record.l2_lambda:g} -> dev MAP {record.dev_map:.4f} (epoch {record.best_epoch})"
        )
        if cfg.output:
            write_records(cfg.output, [record], append=True)

    result = sweep(
        train_set,
        dev_set,
        config,
        encoder,
        base,
        learning_rates=cfg.lrs or LEARNING_RATES,
        batch_sizes=cfg.batches or BATCH_SIZES,
        l2_lambdas=cfg.l2s or L2_LAMBDAS,
        channels=cfg.channel_list,
        on_point=report,
    )
    if cfg.checkpoint:
        best = result.best
        write_checkpoint(
            cfg.checkpoint,
            result.best_result.model,
            result.best_result.encoder,
            initial=(QmwfModel.initialize(result.best_result.model.config, substream(seed, INIT)), encoder),
            hyper=base.model_copy(
                update={"learning_rate": best.learning_rate, "batch_size": best.batch_size, "l2_lambda": best.l2_lambda}
            ).model_dump(),
            best_epoch=best.best_epoch,
            seed=seed,
        )

    print()
    print("=" * 60)
    print("SUMMARY")
    print(f"Grid points: {len(result.records)}")
    print(f"Best: {result.best.model_dump_json()}")
    print(f"Finished at: {datetime.now().isoformat()}")
    print("=" * 60)
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "train": cmd_train,
    "eval": cmd_eval,
    "repr": cmd_repr,
    "decompose": cmd_decompose,
    "convert": cmd_convert,
    "sweep": cmd_sweep,
}
