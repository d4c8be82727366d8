"""Two-modality alignment as a linear inverse problem.

Paired observations ``x1`` (d1 x n) and ``x2`` (d2 x n) are stacked into
``X = [x1; -x2]``. Any row vector in the left null space of ``X`` maps both
modalities to the same latent coordinate, so a k-dimensional aligned latent
space exists exactly when that null space has dimension >= k. The solver
extracts the k left singular vectors of ``X`` with the smallest singular
values; when exact alignment is impossible this choice minimizes
``||A @ X||_F`` over all orthonormal-row maps.
"""

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from .errors import DataError
from .rng import rng_stream

DEFAULT_RANK_TOLERANCE = 1e-10

# Below this stacked dimension a full LAPACK SVD is cheaper than iterating.
_TRUNCATED_MIN_DIM = 512


class SvdMode(Enum):
    FULL = "full"
    TRUNCATED_SMALLEST_K = "truncated"


def as_matrix(a, name: str = "matrix", allow_empty: bool = False) -> np.ndarray:
    """Validate ``a`` as a finite 2-D float64 array and return it.

    ``allow_empty`` permits zero rows or columns (degenerate blocks produced
    by splits); by default both dimensions must be positive.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not allow_empty and (a.shape[0] == 0 or a.shape[1] == 0):
        raise ValueError(f"{name} must be non-empty, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise DataError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class AlignmentProblem:
    """Paired modality matrices plus solver configuration.

    Attributes
    ----------
    x1, x2 : np.ndarray
        Modality data, one sample per column; column counts must match.
    k : int
        Latent dimension, 1 <= k <= d1 + d2.
    rank_tolerance : float
        Singular values <= rank_tolerance * sigma_max count as zero when
        measuring the null-space dimension.
    svd_mode : SvdMode
        FULL computes a dense SVD; TRUNCATED_SMALLEST_K iterates for the k
        smallest left singular vectors only (falls back to FULL for small
        stacked dimension).
    """

    x1: np.ndarray
    x2: np.ndarray
    k: int
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE
    svd_mode: SvdMode = SvdMode.FULL

    def __post_init__(self):
        object.__setattr__(self, "x1", as_matrix(self.x1, "x1", allow_empty=True))
        object.__setattr__(self, "x2", as_matrix(self.x2, "x2", allow_empty=True))
        if self.x1.shape[1] != self.x2.shape[1]:
            raise ValueError(
                f"x1 and x2 must have paired columns, got {self.x1.shape[1]} and {self.x2.shape[1]}"
            )
        if self.x1.shape[1] == 0:
            raise ValueError("need at least one sample column")
        d = self.x1.shape[0] + self.x2.shape[0]
        if not 1 <= self.k:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.k > d:
            raise ValueError(f"k={self.k} exceeds stacked dimension d={d}")
        if self.rank_tolerance < 0:
            raise ValueError("rank_tolerance must be >= 0")

    @property
    def d1(self) -> int:
        return self.x1.shape[0]

    @property
    def d2(self) -> int:
        return self.x2.shape[0]

    @property
    def n(self) -> int:
        return self.x1.shape[1]


@dataclass(frozen=True)
class AlignmentSolution:
    """Recovered alignment maps and residual diagnostics.

    ``a_combined`` is ``[a1 | a2]`` with orthonormal rows ordered by
    descending associated singular value; ``smallest_singular_values``
    follows the same order. ``perfect`` records whether the left null space
    was large enough for an exact solution.
    """

    a_combined: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    residual_frobenius: float
    smallest_singular_values: np.ndarray
    left_null_dim: int
    perfect: bool


def stack_modalities(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Stack ``x1`` over the negation of ``x2``.

    Columns are paired samples, so a row vector annihilating the stack maps
    both modalities to equal coordinates.
    """
    x1 = as_matrix(x1, "x1", allow_empty=True)
    x2 = as_matrix(x2, "x2", allow_empty=True)
    if x1.shape[1] != x2.shape[1]:
        raise ValueError(
            f"column counts must match, got {x1.shape[1]} and {x2.shape[1]}"
        )
    return np.vstack([x1, -x2])


def numerical_rank(x: np.ndarray, rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> int:
    """Count singular values above ``rank_tolerance * sigma_max``."""
    x = as_matrix(x, "x")
    sigma = np.linalg.svd(x, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > rank_tolerance * sigma[0]))


def left_null_dimension(x: np.ndarray, rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> int:
    """Dimension of the left null space: rows minus numerical rank."""
    x = as_matrix(x, "x")
    return x.shape[0] - numerical_rank(x, rank_tolerance)


def split_solution(a: np.ndarray, d1: int, d2: int):
    """Split a combined map into its per-modality column blocks."""
    a = as_matrix(a, "a", allow_empty=True)
    if d1 < 0 or d2 < 0 or d1 + d2 != a.shape[1]:
        raise ValueError(f"d1+d2 must equal {a.shape[1]}, got {d1}+{d2}")
    return a[:, :d1], a[:, d1:]


def encode(a_m: np.ndarray, x_m: np.ndarray) -> np.ndarray:
    """Apply a modality map: column i of the result is the latent estimate
    for sample i."""
    a_m = as_matrix(a_m, "a_m", allow_empty=True)
    x_m = as_matrix(x_m, "x_m", allow_empty=True)
    if a_m.shape[1] != x_m.shape[0]:
        raise ValueError(
            f"inner dimensions disagree: map has {a_m.shape[1]} cols, data has {x_m.shape[0]} rows"
        )
    return a_m @ x_m


def verify_perfect(solution: AlignmentSolution, x1: np.ndarray, x2: np.ndarray,
                   tolerance: float) -> bool:
    """True iff every paired sample maps to the same latent vector within
    ``tolerance`` (worst-case Euclidean gap)."""
    z1 = encode(solution.a1, x1)
    z2 = encode(solution.a2, x2)
    if z1.shape != z2.shape:
        raise ValueError("encoded latents have mismatched shapes")
    gaps = np.linalg.norm(z1 - z2, axis=0)
    worst = float(gaps.max()) if gaps.size else 0.0
    return worst <= tolerance


def _canonicalize_rows(a: np.ndarray) -> np.ndarray:
    """Flip row signs so each row's largest-magnitude entry is positive.

    SVD sign ambiguity would otherwise make output files depend on the
    LAPACK build; the row space is unchanged.
    """
    a = a.copy()
    for i in range(a.shape[0]):
        j = int(np.argmax(np.abs(a[i])))
        if a[i, j] < 0:
            a[i] = -a[i]
    return a


def _padded_singular_values(sigma: np.ndarray, d: int) -> np.ndarray:
    """Extend the min(d, n) computed singular values with the implicit
    zeros up to d (a d x n matrix with n < d has d - n zero values)."""
    out = np.zeros(d)
    out[: sigma.size] = sigma
    return out


def _smallest_left_vectors_full(x: np.ndarray, k: int, rank_tolerance: float):
    u, sigma, _ = np.linalg.svd(x, full_matrices=True)
    d = x.shape[0]
    padded = _padded_singular_values(sigma, d)
    null_dim = d - _rank_from_singular_values(padded, rank_tolerance)
    # Last k columns of U; ties among equal values resolve to later indices.
    return u[:, d - k:].T, padded[d - k:], null_dim


def _smallest_left_vectors_truncated(x: np.ndarray, k: int, rank_tolerance: float,
                                     oversample: int = 8, max_iter: int = 200):
    """Shift-inverted subspace iteration on the row Gram matrix.

    Dominant eigenvectors of ``(X X^T + shift I)^{-1}`` are the left singular
    vectors of X with the smallest singular values; a Rayleigh-Ritz step on
    the converged subspace extracts the eigenpairs. Costs O(d^2 n) for the
    Gram product plus O(d^2 (k + p)) per iteration, avoiding the O(d n^2)
    full decomposition for wide matrices.

    Rank is counted on the Gram spectrum, which cannot resolve singular
    values below ~sqrt(d * eps) * sigma_max; the effective tolerance floors
    there.
    """
    d = x.shape[0]
    g = x @ x.T
    scale = float(np.trace(g)) / d
    shift = 1e-12 * scale if scale > 0 else 1.0
    factor = cho_factor(g + shift * np.eye(d), lower=True)
    # Fixed-key stream: deterministic for a given input and configuration.
    start = rng_stream(0x5A11E27, 0).standard_normal((d, k + min(oversample, d - k)))
    q, _ = np.linalg.qr(start)
    prev = None
    for _ in range(max_iter):
        q, _ = np.linalg.qr(cho_solve(factor, q))
        ritz = np.linalg.eigvalsh(q.T @ g @ q)[:k]
        if prev is not None and np.max(np.abs(ritz - prev)) <= 1e-13 * max(scale, 1.0):
            break
        prev = ritz
    b = q.T @ g @ q
    w, v = eigh(0.5 * (b + b.T))
    vecs = q @ v[:, :k]
    sig = np.sqrt(np.clip(w[:k], 0.0, None))

    lam = np.linalg.eigvalsh(g)
    lam_max = float(lam[-1]) if lam.size else 0.0
    if lam_max <= 0.0:
        null_dim = d
    else:
        floor = max(rank_tolerance**2, d * np.finfo(np.float64).eps) * lam_max
        null_dim = d - int(np.count_nonzero(lam > floor))
    # Reverse to descending sigma to match the full-SVD row ordering.
    return vecs[:, ::-1].T, sig[::-1], null_dim


def solve_alignment(problem: AlignmentProblem) -> AlignmentSolution:
    """Solve ``A @ [x1; -x2] = 0`` exactly when possible, optimally in the
    Frobenius norm otherwise.

    Returns an :class:`AlignmentSolution` whose rows are orthonormal. When
    the left null space of the stacked matrix has dimension >= k the
    residual is zero up to round-off and ``perfect`` is True; otherwise the
    residual equals ``sqrt(sum of the k smallest squared singular values)``,
    which no other orthonormal-row map can beat.
    """
    x = stack_modalities(problem.x1, problem.x2)
    d, n = x.shape
    k = problem.k
    if k == d:
        warnings.warn(
            f"k equals the stacked dimension d={d}; exact alignment is impossible "
            "unless the data is all zeros",
            stacklevel=2,
        )

    if problem.svd_mode is SvdMode.TRUNCATED_SMALLEST_K and d > _TRUNCATED_MIN_DIM:
        rows, smallest, null_dim = _smallest_left_vectors_truncated(
            x, k, problem.rank_tolerance)
    else:
        rows, smallest, null_dim = _smallest_left_vectors_full(
            x, k, problem.rank_tolerance)

    a = _canonicalize_rows(rows)
    residual = float(np.linalg.norm(a @ x))
    a1, a2 = split_solution(a, problem.d1, problem.d2)
    return AlignmentSolution(
        a_combined=a,
        a1=a1,
        a2=a2,
        residual_frobenius=residual,
        smallest_singular_values=np.asarray(smallest, dtype=np.float64),
        left_null_dim=int(null_dim),
        perfect=bool(null_dim >= k),
    )


def _rank_from_singular_values(sigma: np.ndarray, rank_tolerance: float) -> int:
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > rank_tolerance * sigma[0]))
