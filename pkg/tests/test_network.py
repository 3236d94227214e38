import numpy as np
import pytest
from pydantic import ValidationError

from qmwf.config import Settings
from qmwf.errors import ConfigValidationError, DimensionError
from qmwf.network import (
    QmwfConfig,
    QmwfModel,
    Representation,
    convolve,
    forward,
    geometric_pool,
    log_product_pool,
    match_score,
    product_pool,
    windows,
)
from qmwf.tensor import projection_bruteforce


def unit_rows(rng, n, m):
    rows = rng.standard_normal((n, m))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def random_model(rng, **kwargs):
    config = QmwfConfig(**kwargs)
    model = QmwfModel.initialize(config, rng)
    model.out_weights[:] = rng.standard_normal(config.channels)
    return model


def test_convolve_single_scalar_window():
    config = QmwfConfig(embed_dim=1, channels=1, max_positions=1)
    model = QmwfModel(config, kernels=np.array([[[2.0]]]))
    np.testing.assert_array_equal(convolve(np.array([[3.0]]), model), [[6.0]])


def test_convolve_orthogonal_kernel_gives_zero():
    config = QmwfConfig(embed_dim=2, channels=1, max_positions=2)
    model = QmwfModel(config, kernels=np.array([[[0.0, 1.0], [0.0, 1.0]]]))
    rows = np.array([[1.0, 0.0], [1.0, 0.0]])
    np.testing.assert_array_equal(convolve(rows, model), [[0.0, 0.0]])


def test_convolve_matches_loop_with_patches(rng):
    model = random_model(rng, embed_dim=3, channels=4, patch_size=2, max_positions=6)
    rows = unit_rows(rng, 5, 3)
    sigma = convolve(rows, model)
    assert sigma.shape == (4, 4)
    for r in range(4):
        for i in range(4):
            window = np.concatenate([rows[i], rows[i + 1]])
            assert sigma[r, i] == pytest.approx(model.kernels[r, i] @ window, rel=1e-12, abs=1e-15)


def test_windows_shorter_than_patch_are_empty():
    assert windows(np.ones((1, 3)), 2).shape == (0, 6)


def test_product_pool():
    np.testing.assert_array_equal(product_pool(np.array([[2.0, 3.0, 4.0]])), [24.0])
    np.testing.assert_array_equal(product_pool(np.array([[2.0, 0.0, 4.0]])), [0.0])


def test_product_pool_of_empty_row_is_one():
    np.testing.assert_array_equal(product_pool(np.zeros((3, 0))), [1.0, 1.0, 1.0])


def test_product_pool_is_cumulative(rng):
    sigma = rng.standard_normal((2, 5))
    np.testing.assert_allclose(
        product_pool(sigma), product_pool(sigma[:, :4]) * sigma[:, 4], rtol=1e-12
    )


def test_log_product_pool_of_ones_is_near_zero():
    logs, signs = log_product_pool(np.ones((1, 4)), 1e-12)
    assert abs(logs[0]) < 1e-10
    assert signs[0] == 1.0


def test_log_product_pool_without_epsilon():
    logs, _ = log_product_pool(np.array([[np.e, np.e]]), 0.0)
    assert logs[0] == pytest.approx(2.0, abs=1e-15)


def test_log_product_pool_matches_linear_pool_for_positive_responses(rng):
    sigma = rng.uniform(0.1, 2.0, (3, 6))
    logs, signs = log_product_pool(sigma, 0.0)
    np.testing.assert_allclose(np.exp(logs), product_pool(sigma), rtol=1e-9)
    np.testing.assert_array_equal(signs, [1.0, 1.0, 1.0])


def test_log_product_pool_sign_parity():
    _, signs = log_product_pool(np.array([[-1.0, 2.0], [-1.0, -2.0], [0.5, -3.0]]), 1e-6)
    np.testing.assert_array_equal(signs, [-1.0, 1.0, -1.0])


def test_forward_single_word_single_channel():
    config = QmwfConfig(embed_dim=1, channels=1, max_positions=1)
    model = QmwfModel(config, kernels=np.array([[[1.0]]]), out_weights=np.array([1.0]))
    rep = forward(np.array([[0.5]]), model)
    np.testing.assert_array_equal(rep.values, [0.5])


@pytest.mark.parametrize("shared", [False, True])
def test_network_output_equals_dense_projection(rng, shared):
    for _ in range(25):
        n, m, r = int(rng.integers(1, 4)), int(rng.integers(2, 5)), int(rng.integers(1, 6))
        model = random_model(rng, embed_dim=m, channels=r, shared_kernels=shared, max_positions=3)
        rows = unit_rows(rng, n, m)
        oracle = projection_bruteforce(rows, model.as_cp_factors(n))
        assert float(np.sum(forward(rows, model).values)) == pytest.approx(oracle, rel=1e-9, abs=1e-12)


def test_known_three_word_projection(rng):
    model = random_model(rng, embed_dim=4, channels=5, max_positions=3)
    rows = unit_rows(rng, 3, 4)
    expected = sum(
        model.out_weights[r] * np.prod([model.kernels[r, i] @ rows[i] for i in range(3)]) for r in range(5)
    )
    assert float(np.sum(forward(rows, model).values)) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("log_domain", [False, True])
def test_shared_kernels_ignore_word_order(rng, log_domain):
    model = random_model(rng, embed_dim=3, channels=4, shared_kernels=True, log_domain=log_domain, max_positions=6)
    rows = unit_rows(rng, 6, 3)
    reference = forward(rows, model).signed()
    for _ in range(20):
        permuted = forward(rows[rng.permutation(6)], model).signed()
        np.testing.assert_allclose(permuted, reference, rtol=0, atol=1e-12)


def test_forward_scales_with_row_and_weight(rng):
    model = random_model(rng, embed_dim=3, channels=2, max_positions=3)
    rows = unit_rows(rng, 3, 3)
    base = forward(rows, model).values
    scaled_rows = rows.copy()
    scaled_rows[1] *= 2.5
    np.testing.assert_allclose(forward(scaled_rows, model).values, 2.5 * base, rtol=1e-12)
    model.out_weights[0] *= -3.0
    assert forward(rows, model).values[0] == pytest.approx(-3.0 * base[0], rel=1e-12)


def test_sentence_shorter_than_patch_pools_to_neutral_value(rng):
    model = random_model(rng, embed_dim=3, channels=2, patch_size=2, max_positions=4)
    rep = forward(unit_rows(rng, 1, 3), model)
    np.testing.assert_array_equal(rep.values, model.out_weights)

    log_model = random_model(rng, embed_dim=3, channels=2, patch_size=2, log_domain=True, max_positions=4)
    np.testing.assert_array_equal(forward(unit_rows(rng, 1, 3), log_model).values, log_model.out_weights)


def test_log_domain_is_the_signed_geometric_mean(rng):
    model = random_model(rng, embed_dim=3, channels=2, log_domain=True, epsilon=1e-12, max_positions=4)
    model.kernels[:] = rng.uniform(0.2, 0.6, model.kernels.shape)
    rows = np.abs(unit_rows(rng, 4, 3))
    sigma = convolve(rows, model)
    rep = forward(rows, model)
    np.testing.assert_allclose(rep.values, model.out_weights * np.prod(sigma, axis=1) ** 0.25, rtol=1e-9)
    np.testing.assert_array_equal(rep.signs, [1.0, 1.0])

    rows[0] *= -1.0
    np.testing.assert_array_equal(forward(rows, model).signs, [-1.0, -1.0])


def test_log_domain_magnitude_does_not_depend_on_length(rng):
    model = random_model(rng, embed_dim=3, channels=3, shared_kernels=True, log_domain=True, max_positions=8)
    word = unit_rows(rng, 1, 3)
    short = forward(np.repeat(word, 2, axis=0), model)
    long = forward(np.repeat(word, 8, axis=0), model)
    np.testing.assert_allclose(long.values, short.values, rtol=1e-12)


def test_geometric_pool_of_empty_rows_is_one():
    magnitudes, signs = geometric_pool(np.zeros((3, 0)), 1e-6)
    np.testing.assert_array_equal(magnitudes, [1.0, 1.0, 1.0])
    np.testing.assert_array_equal(signs, [1.0, 1.0, 1.0])


def test_sentence_longer_than_kernel_positions_is_rejected(rng):
    model = random_model(rng, embed_dim=3, channels=2, max_positions=3)
    with pytest.raises(DimensionError):
        forward(unit_rows(rng, 4, 3), model)


def test_shared_kernels_accept_any_length(rng):
    model = random_model(rng, embed_dim=3, channels=2, shared_kernels=True, max_positions=3)
    assert forward(unit_rows(rng, 10, 3), model).size == 2


def test_forward_rejects_wrong_embedding_width(rng):
    model = random_model(rng, embed_dim=3, channels=2, max_positions=3)
    with pytest.raises(DimensionError):
        forward(unit_rows(rng, 2, 4), model)


def test_match_score():
    u = Representation(np.array([0.6, 0.8]))
    assert match_score(u, u) == pytest.approx(1.0)
    assert match_score(u, Representation(np.array([0.8, -0.6]))) == pytest.approx(0.0, abs=1e-15)


def test_match_score_applies_signs():
    q = Representation(np.array([1.0, 2.0]), signs=np.array([1.0, -1.0]))
    a = Representation(np.array([3.0, 1.0]), signs=np.array([1.0, 1.0]))
    assert match_score(q, a) == pytest.approx(1.0)


def test_match_score_rejects_length_mismatch():
    with pytest.raises(DimensionError):
        match_score(Representation(np.ones(2)), Representation(np.ones(3)))


def test_config_rejects_large_patch():
    with pytest.raises(ValidationError):
        QmwfConfig(embed_dim=3, channels=2, patch_size=4)


def test_config_from_settings_applies_overrides():
    config = QmwfConfig.from_settings(Settings(), embed_dim=7, channels=3, log_domain=False)
    assert (config.embed_dim, config.channels, config.log_domain) == (7, 3, False)
    assert config.max_positions == Settings().max_positions


def test_config_from_settings_reports_invalid_values():
    with pytest.raises(ConfigValidationError):
        QmwfConfig.from_settings(Settings(), embed_dim=3, channels=0)


def test_model_rejects_wrong_kernel_shape():
    config = QmwfConfig(embed_dim=2, channels=1, max_positions=2)
    with pytest.raises(DimensionError):
        QmwfModel(config, kernels=np.ones((1, 1, 2)))
