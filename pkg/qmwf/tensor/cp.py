"""CP (canonical polyadic) factors: reconstruction, ALS fitting and the projection oracle."""

import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import TYPE_CHECKING, Iterator, Optional, Union

import numpy as np

from qmwf.errors import DimensionError
from qmwf.tensor.dense import DenseTensor, check_capacity, inner_product, tensor_product

if TYPE_CHECKING:
    from qmwf.wavefunction import SentenceMatrix

logger = logging.getLogger(__name__)

UNIT_NORM_TOL = 1e-8
RIDGE = 1e-9
MAX_CONDITION = 1e12
# one ALS start gets at most max_iters / BUDGET_SHARES sweeps
BUDGET_SHARES = 5
EIG_IMAG_TOL = 1e-8
EIG_GAP_TOL = 1e-8


@dataclass(frozen=True)
class CPFactors:
    """
    Weighted sum of R rank-1 tensors: T = Σ_r t_r · e_{r,1} ⊗ ... ⊗ e_{r,N}.

    ``factors`` has shape (R, N, M), or (R, M) when ``shared`` is set and the
    same unit vector e_r is used at every position.
    """

    weights: np.ndarray
    factors: np.ndarray
    order: int
    shared: bool = False

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        factors = np.array(self.factors, dtype=np.float64)
        expected_ndim = 2 if self.shared else 3
        if factors.ndim != expected_ndim:
            raise DimensionError(
                f"factors must have {expected_ndim} axes (shared={self.shared}), got {factors.shape}"
            )
        if factors.shape[0] != weights.size or weights.size == 0:
            raise DimensionError(f"{weights.size} weights for {factors.shape[0]} factor groups")
        if not self.shared and factors.shape[1] != self.order:
            raise DimensionError(f"order {self.order} but factors hold {factors.shape[1]} positions")
        if self.order < 1:
            raise DimensionError("order must be positive")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(factors))):
            raise DimensionError("CP weights and factors must be finite")
        norms = np.linalg.norm(factors, axis=-1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise DimensionError("every CP factor vector must have unit Euclidean norm")
        weights.setflags(write=False)
        factors.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "factors", factors)

    @property
    def rank(self) -> int:
        return int(self.weights.size)

    @property
    def dim(self) -> int:
        return int(self.factors.shape[-1])

    def factor(self, r: int, i: int) -> np.ndarray:
        """Unit vector e_{r,i}."""
        return self.factors[r] if self.shared else self.factors[r, i]

    def position_factors(self, r: int) -> list[np.ndarray]:
        """The N factor vectors of channel r."""
        return [self.factor(r, i) for i in range(self.order)]


@dataclass(frozen=True)
class ALSResult:
    """Outcome of a CP-ALS fit."""

    factors: CPFactors
    relative_error: float
    iterations: int
    regularized: bool


def cp_reconstruct(f: CPFactors, cap: Optional[int] = None) -> DenseTensor:
    """
    Materialize Σ_r t_r · e_{r,1} ⊗ ... ⊗ e_{r,N} as a dense tensor.

    Raises:
        CapacityError: If dim ** order exceeds the element cap
    """
    check_capacity(f.order, f.dim, cap)
    data = np.zeros(f.dim**f.order)
    for r in range(f.rank):
        data += f.weights[r] * tensor_product(f.position_factors(r), cap).data
    return DenseTensor(order=f.order, dim=f.dim, data=data)


def projection_bruteforce(
    s: Union["SentenceMatrix", np.ndarray],
    f: CPFactors,
    cap: Optional[int] = None,
) -> float:
    """
    Project the global tensor onto the sentence product state, densely.

    Materializes T from the CP factors and the rank-1 tensor of the sentence
    rows, then contracts them. Exponential in N; used as a reference value.

    Args:
        s: Sentence matrix with N rows of length M
        f: CP factors of order N and dim M
        cap: Element cap override

    Returns:
        Σ_{h_1..h_N} T[h_1..h_N] · A[h_1..h_N]
    """
    rows = np.asarray(getattr(s, "rows", s), dtype=np.float64)
    if rows.ndim != 2 or rows.shape != (f.order, f.dim):
        raise DimensionError(
            f"sentence of shape {rows.shape} does not match CP order {f.order}, dim {f.dim}"
        )
    global_tensor = cp_reconstruct(f, cap)
    local_tensor = tensor_product(list(rows), cap)
    return inner_product(global_tensor, local_tensor)


def _khatri_rao(mats: list[np.ndarray]) -> np.ndarray:
    """Column-wise Kronecker product, first matrix varying slowest."""
    rank = mats[0].shape[1]
    return reduce(lambda a, b: (a[:, None, :] * b[None, :, :]).reshape(-1, rank), mats)


def _dense_from(weights: np.ndarray, mats: list[np.ndarray]) -> np.ndarray:
    """Flat dense tensor from weights and per-mode (M, R) factor matrices."""
    return _khatri_rao(mats) @ weights


def _normalize_columns(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale columns to unit norm; zero columns become the first basis vector."""
    norms = np.linalg.norm(mat, axis=0)
    out = mat / np.where(norms > 0, norms, 1.0)
    zero = norms == 0
    if np.any(zero):
        out[:, zero] = 0.0
        out[0, zero] = 1.0
    return out, norms


def _initial_factors(x: np.ndarray, rank: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Leading left singular vectors of each unfolding, padded with random columns."""
    order, dim = x.ndim, x.shape[0]
    mats = []
    for n in range(order):
        unfolded = np.moveaxis(x, n, 0).reshape(dim, -1)
        u, _, _ = np.linalg.svd(unfolded, full_matrices=False)
        mat = rng.standard_normal((dim, rank))
        take = min(rank, u.shape[1])
        mat[:, :take] = u[:, :take]
        mats.append(_normalize_columns(mat)[0])
    return mats


def _solve_gram(gram: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, bool]:
    """Solve gram @ X.T = rhs.T, falling back to a ridge term when ill-conditioned."""
    cond = np.linalg.cond(gram)
    if np.isfinite(cond) and cond < MAX_CONDITION:
        try:
            return np.linalg.solve(gram, rhs.T).T, False
        except np.linalg.LinAlgError:
            pass
    ridged = gram + RIDGE * np.eye(gram.shape[0])
    return np.linalg.lstsq(ridged, rhs.T, rcond=None)[0].T, True


def _update_mode(x: np.ndarray, mats: list[np.ndarray], n: int) -> tuple[np.ndarray, np.ndarray, bool]:
    """Least-squares update of mode n with the other modes fixed; returns (unit columns, norms, ridged)."""
    dim = x.shape[0]
    others = [mats[k] for k in range(x.ndim) if k != n]
    gram = reduce(np.multiply, [m.T @ m for m in others])
    unfolded = np.moveaxis(x, n, 0).reshape(dim, -1)
    updated, ridged = _solve_gram(gram, unfolded @ _khatri_rao(others))
    mat, weights = _normalize_columns(updated)
    return mat, weights, ridged


def _leading_subspace(x: np.ndarray, n: int, rank: int) -> np.ndarray:
    unfolded = np.moveaxis(x, n, 0).reshape(x.shape[0], -1)
    return np.linalg.svd(unfolded, full_matrices=False)[0][:, :rank]


def _real_eig(mat: np.ndarray) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Eigenpairs sorted by eigenvalue, or None when they are not (numerically) real."""
    values, vectors = np.linalg.eig(mat)
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.max(np.abs(values.imag)) > EIG_IMAG_TOL * scale:
        return None
    order = np.argsort(values.real)
    return values.real[order], vectors.real[:, order]


def _diagonalization_start(x: np.ndarray, rank: int, rng: np.random.Generator) -> Optional[list[np.ndarray]]:
    """
    Exact factors of an order-3 tensor with rank <= dim, from two random slice mixtures.

    Modes 0 and 1 are compressed onto their leading R-dimensional subspaces, where
    each mixture of frontal slices is S = Ã·D·B̃ᵀ with invertible Ã, B̃. The
    eigenvectors of S_x·S_y⁻¹ and of S_xᵀ·S_y⁻ᵀ are then the columns of Ã and B̃,
    both with eigenvalues diag(D_x / D_y). Mode 2 follows by least squares.

    Returns:
        Factor matrices for modes 0..2, or None when the tensor has no such
        structure (rank above dim, singular mixture, complex or clustered
        eigenvalues, unmatched spectra)
    """
    dim = x.shape[0]
    if x.ndim != 3 or rank > dim:
        return None
    u = _leading_subspace(x, 0, rank)
    v = _leading_subspace(x, 1, rank)
    core = np.einsum("ia,jb,ijk->abk", u, v, x)
    s_x = core @ rng.standard_normal(dim)
    s_y = core @ rng.standard_normal(dim)
    cond = np.linalg.cond(s_y)
    if not np.isfinite(cond) or cond >= MAX_CONDITION:
        return None
    try:
        left = _real_eig(np.linalg.solve(s_y.T, s_x.T).T)
        right = _real_eig(np.linalg.solve(s_y, s_x).T)
    except np.linalg.LinAlgError:
        return None
    if left is None or right is None:
        return None
    values, vectors_a = left
    scale = max(1.0, float(np.max(np.abs(values))))
    if rank > 1 and np.min(np.diff(values)) <= EIG_GAP_TOL * scale:
        return None
    if not np.allclose(values, right[0], rtol=1e-6, atol=1e-9 * scale):
        return None

    mats = [
        _normalize_columns(u @ vectors_a)[0],
        _normalize_columns(v @ right[1])[0],
        np.zeros((dim, rank)),
    ]
    mats[2] = _update_mode(x, mats, 2)[0]
    return mats


def _starting_points(x: np.ndarray, rank: int, rng: np.random.Generator) -> Iterator[list[np.ndarray]]:
    """Algebraic start when available, then the SVD start, then random restarts."""
    start = _diagonalization_start(x, rank, rng)
    if start is not None:
        yield start
    yield _initial_factors(x, rank, rng)
    while True:
        yield [_normalize_columns(rng.standard_normal((x.shape[0], rank)))[0] for _ in range(x.ndim)]


@dataclass
class _Fit:
    mats: list[np.ndarray]
    weights: np.ndarray
    error: float
    sweeps: int
    regularized: bool


def _run_sweeps(x: np.ndarray, mats: list[np.ndarray], norm_x: float, budget: int, tol: float) -> _Fit:
    mats = list(mats)
    weights = np.ones(mats[0].shape[1])
    regularized = False
    error = np.inf
    sweeps = 0
    for sweeps in range(1, budget + 1):
        for n in range(x.ndim):
            mats[n], weights, ridged = _update_mode(x, mats, n)
            regularized = regularized or ridged
        previous = error
        error = float(np.linalg.norm(x.reshape(-1) - _dense_from(weights, mats)) / norm_x)
        if error <= tol or abs(previous - error) <= tol * 1e-3:
            break
    return _Fit(mats, weights, error, sweeps, regularized)


def cp_als(
    t: DenseTensor,
    rank: int,
    max_iters: int = 500,
    tol: float = 1e-10,
    seed: int = 0,
) -> ALSResult:
    """
    Fit rank-R CP factors to a dense tensor by alternating least squares.

    Each sweep solves one least-squares problem per mode, then renormalizes
    the factor columns and folds their norms into the weights. A start stops
    when the relative Frobenius error drops to ``tol`` or stops improving.

    Order-3 tensors with R <= dim start from the simultaneous diagonalization
    of two random slice mixtures, which is exact for generic rank-R input;
    further starts (SVD, then random) split the remaining sweeps and the best
    fit is kept, so a start caught in a slow-converging region does not use
    up the budget.

    Args:
        t: Tensor to decompose
        rank: Number of rank-1 terms R
        max_iters: Total number of sweeps over all starts
        tol: Error / improvement threshold
        seed: Seed for the random parts of the starts

    Returns:
        ALSResult with unit-norm factors, weights, final relative error,
        sweeps used and whether any solve needed the ridge fallback
    """
    if rank < 1 or max_iters < 1:
        raise DimensionError(f"rank and max_iters must be >= 1, got {rank}, {max_iters}")

    x = t.array
    order, dim = t.order, t.dim
    norm_x = float(np.linalg.norm(t.data))

    if norm_x == 0.0:
        basis = np.zeros((rank, order, dim))
        basis[..., 0] = 1.0
        return ALSResult(CPFactors(np.zeros(rank), basis, order), 0.0, 0, False)

    if order == 1:
        factors = np.zeros((rank, 1, dim))
        factors[:, 0, 0] = 1.0
        factors[0, 0] = t.data / norm_x
        weights = np.zeros(rank)
        weights[0] = norm_x
        return ALSResult(CPFactors(weights, factors, order), 0.0, 1, False)

    rng = np.random.default_rng(seed)
    share = max(1, math.ceil(max_iters / BUDGET_SHARES))
    best: Optional[_Fit] = None
    used, starts, regularized = 0, 0, False
    for mats in _starting_points(x, rank, rng):
        fit = _run_sweeps(x, mats, norm_x, min(share, max_iters - used), tol)
        used += fit.sweeps
        starts += 1
        regularized = regularized or fit.regularized
        if best is None or fit.error < best.error:
            best = fit
        if best.error <= tol or used >= max_iters:
            break

    if regularized:
        logger.warning("cp_als used the ridge fallback for a singular least-squares subproblem")
    logger.debug(
        "cp_als rank=%d starts=%d sweeps=%d relative_error=%.3e", rank, starts, used, best.error
    )

    factors = np.stack([m.T for m in best.mats], axis=1)
    return ALSResult(CPFactors(best.weights, factors, order), best.error, used, regularized)
