import itertools

import numpy as np
import pytest

from qmwf.errors import CapacityError, DimensionError
from qmwf.tensor import (
    CPFactors,
    DenseTensor,
    coords_of,
    cp_als,
    cp_reconstruct,
    flat_index,
    inner_product,
    projection_bruteforce,
    tensor_product,
)


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_cp(rng, rank, order, dim):
    return CPFactors(rng.standard_normal(rank), unit(rng.standard_normal((rank, order, dim))), order=order)


def test_tensor_product_of_basis_states():
    t = tensor_product([np.array([1.0, 0.0]), np.array([1.0, 0.0])])
    np.testing.assert_array_equal(t.data, [1.0, 0.0, 0.0, 0.0])


def test_tensor_product_single_vector_is_identity():
    t = tensor_product([np.array([0.6, 0.8])])
    assert t.order == 1
    np.testing.assert_array_equal(t.data, [0.6, 0.8])


def test_tensor_product_matches_double_loop(rng):
    a, b = rng.standard_normal(2), rng.standard_normal(2)
    t = tensor_product([a, b])
    for i in range(2):
        for j in range(2):
            assert t[(i, j)] == a[i] * b[j]


def test_tensor_product_rejects_mismatched_lengths():
    with pytest.raises(DimensionError):
        tensor_product([np.ones(2), np.ones(3)])


def test_tensor_product_respects_element_cap():
    with pytest.raises(CapacityError):
        tensor_product([np.ones(10)] * 8, cap=10**7)


def test_tensor_product_is_multilinear(rng):
    a, a2, b, c = (rng.standard_normal(3) for _ in range(4))
    alpha, beta = 0.7, -1.3
    lhs = tensor_product([alpha * a + beta * a2, b, c]).data
    rhs = alpha * tensor_product([a, b, c]).data + beta * tensor_product([a2, b, c]).data
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-15)


def test_tensor_product_norm_is_product_of_row_norms(rng):
    rows = rng.standard_normal((3, 4))
    expected = np.prod(np.linalg.norm(rows, axis=1))
    assert tensor_product(list(rows)).norm() == pytest.approx(expected, rel=1e-12)


def test_flat_index_round_trip():
    for index in range(3**4):
        assert flat_index(coords_of(index, 4, 3), 3) == index
    assert flat_index((1, 0, 2), 3) == 11


def test_dense_tensor_validates_size_and_finiteness():
    with pytest.raises(DimensionError):
        DenseTensor(order=2, dim=2, data=np.ones(3))
    with pytest.raises(DimensionError):
        DenseTensor(order=1, dim=2, data=np.array([1.0, np.nan]))


def test_inner_product_of_unit_tensor_with_itself(rng):
    data = rng.standard_normal(8)
    t = DenseTensor(order=3, dim=2, data=data / np.linalg.norm(data))
    assert inner_product(t, t) == pytest.approx(1.0, abs=1e-12)


def test_inner_product_of_orthogonal_basis_tensors():
    ket00 = tensor_product([np.array([1.0, 0.0]), np.array([1.0, 0.0])])
    ket01 = tensor_product([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
    assert inner_product(ket00, ket01) == 0.0


def test_inner_product_matches_exhaustive_sum(rng):
    a = DenseTensor(order=3, dim=2, data=rng.standard_normal(8))
    b = DenseTensor(order=3, dim=2, data=rng.standard_normal(8))
    expected = sum(a[c] * b[c] for c in itertools.product(range(2), repeat=3))
    assert inner_product(a, b) == pytest.approx(expected, rel=1e-12)


def test_inner_product_rejects_shape_mismatch():
    with pytest.raises(DimensionError):
        inner_product(DenseTensor(order=2, dim=2, data=np.ones(4)), DenseTensor(order=1, dim=4, data=np.ones(4)))


def test_cp_factors_require_unit_vectors():
    with pytest.raises(DimensionError):
        CPFactors(np.ones(1), np.array([[[2.0, 0.0]]]), order=1)


def test_cp_reconstruct_single_basis_term():
    factors = np.zeros((1, 3, 2))
    factors[..., 0] = 1.0
    t = cp_reconstruct(CPFactors(np.ones(1), factors, order=3))
    expected = np.zeros(8)
    expected[0] = 1.0
    np.testing.assert_array_equal(t.data, expected)


def test_cp_reconstruct_matches_outer_product_sum(rng):
    f = random_cp(rng, rank=2, order=2, dim=3)
    expected = sum(f.weights[r] * np.outer(f.factors[r, 0], f.factors[r, 1]) for r in range(2))
    np.testing.assert_allclose(cp_reconstruct(f).array, expected, rtol=1e-12, atol=1e-15)


def test_cp_reconstruct_shared_factors_is_symmetric(rng):
    f = CPFactors(rng.standard_normal(3), unit(rng.standard_normal((3, 4))), order=3, shared=True)
    x = cp_reconstruct(f).array
    for perm in itertools.permutations(range(3)):
        np.testing.assert_allclose(x.transpose(perm), x, rtol=1e-12, atol=1e-15)


def test_cp_als_recovers_rank_one_tensor(rng):
    t = tensor_product([rng.standard_normal(4) for _ in range(3)])
    result = cp_als(t, rank=1)
    assert result.relative_error <= 1e-6
    np.testing.assert_allclose(cp_reconstruct(result.factors).data, t.data, atol=1e-6 * t.norm())


def test_cp_als_zero_tensor():
    result = cp_als(DenseTensor(order=3, dim=2, data=np.zeros(8)), rank=2)
    np.testing.assert_array_equal(result.factors.weights, [0.0, 0.0])
    assert result.relative_error == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_cp_als_recovers_rank_three_tensor(seed):
    rng = np.random.default_rng(seed)
    target = cp_reconstruct(CPFactors(rng.uniform(1.0, 2.0, 3), unit(rng.standard_normal((3, 3, 4))), order=3))
    result = cp_als(target, rank=3, max_iters=500, seed=seed)
    assert result.relative_error <= 1e-6
    assert result.iterations <= 500


def test_cp_als_overparameterized_rank_stays_finite(rng):
    t = tensor_product([rng.standard_normal(3) for _ in range(3)])
    result = cp_als(t, rank=3, max_iters=50)
    assert np.isfinite(result.relative_error)
    assert np.all(np.isfinite(result.factors.weights))


def test_cp_als_rejects_bad_rank():
    with pytest.raises(DimensionError):
        cp_als(DenseTensor(order=2, dim=2, data=np.ones(4)), rank=0)


def test_projection_single_word_collapses_to_weighted_dot(rng):
    f = random_cp(rng, rank=4, order=1, dim=3)
    x = unit(rng.standard_normal(3))
    expected = sum(f.weights[r] * f.factors[r, 0] @ x for r in range(4))
    assert projection_bruteforce(x[None, :], f) == pytest.approx(expected, rel=1e-12)


def test_projection_with_zero_row_is_zero(rng):
    f = random_cp(rng, rank=2, order=3, dim=3)
    rows = rng.standard_normal((3, 3))
    rows[1] = 0.0
    assert projection_bruteforce(rows, f) == 0.0


def test_projection_equals_channel_product_sum(rng):
    for _ in range(20):
        n, m, r = int(rng.integers(1, 5)), int(rng.integers(1, 6)), int(rng.integers(1, 7))
        f = random_cp(rng, rank=r, order=n, dim=m)
        rows = rng.standard_normal((n, m))
        expected = sum(f.weights[k] * np.prod([f.factors[k, i] @ rows[i] for i in range(n)]) for k in range(r))
        assert projection_bruteforce(rows, f) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_projection_rejects_wrong_sentence_shape(rng):
    with pytest.raises(DimensionError):
        projection_bruteforce(rng.standard_normal((2, 3)), random_cp(rng, rank=1, order=3, dim=3))
