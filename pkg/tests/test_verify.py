import pytest

from qmwf.config import Settings
from qmwf.verify import (
    check_cp_als,
    check_metric_oracles,
    check_oracle_identity,
    check_permutation_invariance,
    check_random_guess,
    reference_metrics,
    reference_rank,
    run_suite,
)


@pytest.fixture
def small_settings():
    return Settings(verify_oracle_instances=100, verify_grad_configs=3, verify_als_seeds=3)


def test_oracle_identity_holds():
    result = check_oracle_identity(200, seed=0)
    assert result.passed
    assert result.max_error <= 1e-9


def test_injected_kernel_fault_is_caught():
    result = check_oracle_identity(50, seed=0, fault="kernel")
    assert not result.passed
    assert {"rows", "kernels", "network", "oracle"} <= set(result.failure)


@pytest.mark.parametrize("root", [0, 1, 2, 7, 11])
def test_cp_als_check_recovers_every_seed(root):
    result = check_cp_als(20, seed=root)
    assert result.passed, result.failure
    assert result.max_error <= 1e-6


def test_permutation_check():
    assert check_permutation_invariance(3, 20, seed=0).passed


def test_metric_checks():
    assert check_metric_oracles(300, seed=0).max_error == 0.0
    assert check_random_guess(10_000, seed=0).passed


def test_reference_rank_breaks_ties_by_position():
    scores = [1.0, 2.0, 1.0]
    assert [reference_rank(scores, i) for i in range(3)] == [2, 1, 3]
    assert reference_metrics(scores, [1, 0, 1]) == pytest.approx((0.5 * (1 / 2 + 2 / 3), 0.5, 0.0))


def test_suite_is_reproducible(small_settings):
    seen = []
    first = run_suite(seed=4, settings=small_settings, on_check=seen.append)
    second = run_suite(seed=4, settings=small_settings)
    assert [r.model_dump() for r in first] == [r.model_dump() for r in second]
    assert [r.name for r in seen] == [
        "oracle_identity",
        "gradients",
        "cp_als_roundtrip",
        "permutation_invariance",
        "metric_oracles",
        "random_guess_p_at_1",
    ]
    assert all(r.passed for r in first)


def test_suite_rejects_unknown_fault(small_settings):
    with pytest.raises(ValueError):
        run_suite(settings=small_settings, fault="optimizer")
