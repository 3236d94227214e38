"""Self-contained property suite run by ``qmwf verify``."""

import logging
import time
from typing import Any, Callable, Optional

import numpy as np
from pydantic import BaseModel, Field

from qmwf.config import Settings, get_settings
from qmwf.embedding.encoder import normalize_rows
from qmwf.eval.metrics import RankedCandidates, average_precision, p_at_1, reciprocal_rank
from qmwf.network.config import QmwfConfig
from qmwf.network.layers import forward
from qmwf.network.model import QmwfModel
from qmwf.rng import VERIFY, substream
from qmwf.tensor.cp import CPFactors, cp_als, cp_reconstruct, projection_bruteforce
from qmwf.training.backward import forward_pass
from qmwf.training.gradcheck import GRAD_TOL, check_triplet_gradients
from qmwf.training.hyper import HyperParams

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-9
ALS_TOL = 1e-6
PERMUTATION_TOL = 1e-12
RANDOM_GUESS_P1 = 0.200
RANDOM_GUESS_TOL = 0.01

# Log-domain gradient instances keep every |Σ| at least this far from the kink at 0
MIN_LOG_RESPONSE = 1e-2

FAULTS = ("kernel",)


class CheckResult(BaseModel):
    """Outcome of one property check."""

    name: str
    passed: bool
    max_error: float
    tolerance: float
    instances: int
    seconds: float = Field(0.0, exclude=True)
    failure: Optional[dict[str, Any]] = Field(None, description="First failing instance, for replay")


def _unit_rows(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    return normalize_rows(rng.standard_normal((n, m)))[0]


def _instance(**arrays: Any) -> dict[str, Any]:
    return {k: v.tolist() if isinstance(v, np.ndarray) else v for k, v in arrays.items()}


def check_oracle_identity(instances: int, seed: int, fault: Optional[str] = None) -> CheckResult:
    """
    Network output Σ_r v_r equals the dense projection of its CP factors.

    Patch 1, unshared kernels, linear pooling; N ∈ {1..4}, M ∈ {2, 3, 5},
    R ∈ {1, 3, 6}. With ``fault="kernel"`` the network runs on kernels
    perturbed by 1e-3 and the check is expected to fail.
    """
    rng = substream(seed, VERIFY + ".oracle")
    worst, failure = 0.0, None
    for _ in range(instances):
        n, m, r = int(rng.integers(1, 5)), int(rng.choice([2, 3, 5])), int(rng.choice([1, 3, 6]))
        config = QmwfConfig(embed_dim=m, channels=r, max_positions=n)
        model = QmwfModel(config, rng.standard_normal((r, n, m)), rng.standard_normal(r))
        rows = _unit_rows(rng, n, m)
        oracle = projection_bruteforce(rows, model.as_cp_factors(n))
        if fault == "kernel":
            model.kernels[0, 0, 0] += 1e-3
        value = float(np.sum(forward(rows, model).values))
        error = abs(value - oracle) / max(1.0, abs(oracle))
        if error > worst:
            worst = error
        if error > ORACLE_TOL and failure is None:
            failure = _instance(
                rows=rows, kernels=model.kernels, out_weights=model.out_weights, network=value, oracle=oracle
            )
    return CheckResult(
        name="oracle_identity",
        passed=failure is None,
        max_error=worst,
        tolerance=ORACLE_TOL,
        instances=instances,
        failure=failure,
    )


def _near_kink(model: QmwfModel, rows: np.ndarray) -> bool:
    sigma = forward_pass(model, rows).sigma
    return bool(sigma.size) and float(np.min(np.abs(sigma))) < MIN_LOG_RESPONSE


def check_gradients(configs: int, seed: int) -> CheckResult:
    """Analytic triplet gradients match central differences on random small networks."""
    rng = substream(seed, VERIFY + ".gradients")
    worst, failure = 0.0, None
    done = 0
    while done < configs:
        n, m, r = int(rng.integers(1, 5)), int(rng.integers(2, 6)), int(rng.integers(1, 5))
        config = QmwfConfig(
            embed_dim=m,
            channels=r,
            patch_size=int(rng.integers(1, 4)),
            shared_kernels=bool(rng.integers(2)),
            log_domain=bool(rng.integers(2)),
            max_positions=4,
        )
        model = QmwfModel.initialize(config, rng)
        model.out_weights[:] = rng.uniform(0.5, 1.5, r)
        sentences = [_unit_rows(rng, int(rng.integers(1, n + 1)), m) for _ in range(3)]
        if config.log_domain and any(_near_kink(model, s) for s in sentences):
            continue
        done += 1
        hp = HyperParams(l2_lambda=float(rng.choice([0.0, 1e-3])))
        errors = check_triplet_gradients(model, *sentences, hp)
        block, error = max(errors.items(), key=lambda kv: kv[1])
        worst = max(worst, error)
        if error > GRAD_TOL and failure is None:
            failure = _instance(
                config=config.model_dump(),
                block=block,
                kernels=model.kernels,
                out_weights=model.out_weights,
                question=sentences[0],
                positive=sentences[1],
                negative=sentences[2],
                l2_lambda=hp.l2_lambda,
            )
    return CheckResult(
        name="gradients",
        passed=failure is None,
        max_error=worst,
        tolerance=GRAD_TOL,
        instances=configs,
        failure=failure,
    )


def check_cp_als(seeds: int, seed: int) -> CheckResult:
    """Rank-3 4×4×4 tensors built from random factors are recovered by ALS."""
    worst, failure = 0.0, None
    for k in range(seeds):
        rng = substream(seed + k, VERIFY + ".als")
        factors = normalize_rows(rng.standard_normal((9, 4)))[0].reshape(3, 3, 4)
        target = cp_reconstruct(CPFactors(rng.uniform(1.0, 2.0, 3), factors, order=3))
        result = cp_als(target, rank=3, max_iters=500, seed=seed + k)
        worst = max(worst, result.relative_error)
        if result.relative_error > ALS_TOL and failure is None:
            failure = _instance(seed=seed + k, tensor=target.data, relative_error=result.relative_error)
    return CheckResult(
        name="cp_als_roundtrip",
        passed=failure is None,
        max_error=worst,
        tolerance=ALS_TOL,
        instances=seeds,
        failure=failure,
    )


def check_permutation_invariance(instances: int, permutations: int, seed: int) -> CheckResult:
    """Shared kernels with patch 1 give the same output for any word order."""
    rng = substream(seed, VERIFY + ".permutation")
    worst, failure = 0.0, None
    for _ in range(instances):
        n, m, r = int(rng.integers(2, 8)), int(rng.integers(2, 6)), int(rng.integers(1, 6))
        config = QmwfConfig(
            embed_dim=m, channels=r, shared_kernels=True, log_domain=bool(rng.integers(2)), max_positions=n
        )
        model = QmwfModel.initialize(config, rng)
        rows = _unit_rows(rng, n, m)
        reference = forward(rows, model).signed()
        for _ in range(permutations):
            perm = rng.permutation(n)
            error = float(np.max(np.abs(forward(rows[perm], model).signed() - reference)))
            worst = max(worst, error)
            if error > PERMUTATION_TOL and failure is None:
                failure = _instance(rows=rows, permutation=perm, kernels=model.kernels)
    return CheckResult(
        name="permutation_invariance",
        passed=failure is None,
        max_error=worst,
        tolerance=PERMUTATION_TOL,
        instances=instances * permutations,
        failure=failure,
    )


def reference_rank(scores: list[float], i: int) -> int:
    """1-based rank of candidate i: higher scores first, ties by input order."""
    return 1 + sum(1 for j, s in enumerate(scores) if s > scores[i] or (s == scores[i] and j < i))


def reference_metrics(scores: list[float], labels: list[int]) -> tuple[float, float, float]:
    """(AP, reciprocal rank, top-1 hit) by exhaustive rank counting."""
    ranks = sorted(reference_rank(scores, i) for i, label in enumerate(labels) if label == 1)
    ap = sum(hit / rank for hit, rank in enumerate(ranks, start=1)) / len(ranks)
    return ap, 1.0 / ranks[0], 1.0 if ranks[0] == 1 else 0.0


def check_metric_oracles(groups: int, seed: int) -> CheckResult:
    """MAP, MRR and P@1 terms equal the exhaustive reference on random small groups."""
    rng = substream(seed, VERIFY + ".metrics")
    worst, failure = 0.0, None
    for _ in range(groups):
        size = int(rng.integers(1, 8))
        labels = rng.integers(0, 2, size)
        labels[rng.integers(size)] = 1
        # Few distinct values so ties are common
        scores = rng.integers(0, 4, size).astype(np.float64)
        ranked = RankedCandidates("q", scores, labels)
        got = (average_precision(ranked), reciprocal_rank(ranked), p_at_1([ranked]))
        want = reference_metrics(scores.tolist(), labels.tolist())
        error = max(abs(a - b) for a, b in zip(got, want))
        worst = max(worst, error)
        if error != 0.0 and failure is None:
            failure = _instance(scores=scores, labels=labels, got=list(got), want=list(want))
    return CheckResult(
        name="metric_oracles",
        passed=failure is None,
        max_error=worst,
        tolerance=0.0,
        instances=groups,
        failure=failure,
    )


def check_random_guess(groups: int, seed: int) -> CheckResult:
    """Uniform random scores on 1-in-5 groups give P@1 ≈ 0.2."""
    rng = substream(seed, VERIFY + ".random_guess")
    ranked = []
    for k in range(groups):
        labels = np.zeros(5, dtype=np.int64)
        labels[rng.integers(5)] = 1
        ranked.append(RankedCandidates(f"q{k}", rng.random(5), labels))
    value = p_at_1(ranked)
    error = abs(value - RANDOM_GUESS_P1)
    return CheckResult(
        name="random_guess_p_at_1",
        passed=error <= RANDOM_GUESS_TOL,
        max_error=error,
        tolerance=RANDOM_GUESS_TOL,
        instances=groups,
        failure=None if error <= RANDOM_GUESS_TOL else {"p_at_1": value},
    )


def run_suite(
    seed: int = 0,
    settings: Optional[Settings] = None,
    fault: Optional[str] = None,
    on_check: Optional[Callable[[CheckResult], object]] = None,
) -> list[CheckResult]:
    """
    Run every property check.

    Args:
        seed: Root seed; every check uses its own "verify" substream
        settings: Instance counts (defaults to get_settings())
        fault: Deliberate fault to inject ("kernel"), for testing the suite
        on_check: Called with each result as it completes

    Returns:
        Results in execution order
    """
    settings = settings or get_settings()
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}, expected one of {FAULTS}")

    checks: list[Callable[[], CheckResult]] = [
        lambda: check_oracle_identity(settings.verify_oracle_instances, seed, fault),
        lambda: check_gradients(settings.verify_grad_configs, seed),
        lambda: check_cp_als(settings.verify_als_seeds, seed),
        lambda: check_permutation_invariance(10, 100, seed),
        lambda: check_metric_oracles(1000, seed),
        lambda: check_random_guess(10_000, seed),
    ]
    results = []
    for check in checks:
        start = time.perf_counter()
        result = check()
        result.seconds = time.perf_counter() - start
        logger.info("%s passed=%s max_error=%.3e", result.name, result.passed, result.max_error)
        results.append(result)
        if on_check:
            on_check(result)
    return results
