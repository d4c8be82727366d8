"""Synthetic two-modality worlds with known ground truth.

A world is a latent sample matrix ``z_true`` (k x n), one random generation
matrix per modality, and the observed matrices ``x_m = s_m @ z_true`` plus
optional additive white Gaussian noise. Two latent families are provided:
a Gaussian mixture and a uniform band split by a linear class boundary.
Everything is deterministic given (parameters, seed); see :mod:`palign.rng`
for the substream layout.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import matio
from .errors import NumericalError
from .rng import (
    STREAM_LATENTS,
    STREAM_NOISE_BASE,
    STREAM_TRANSFORM_BASE,
    rng_stream,
)
from .solver import as_matrix

DEFAULT_TRANSFORM_LO = -5.0
DEFAULT_TRANSFORM_HI = 5.0

# Default x-interval for the boundary world's foot points; the band around
# the boundary line only fixes the perpendicular coordinate.
BOUNDARY_X_LO = -10.0
BOUNDARY_X_HI = 20.0


@dataclass(frozen=True)
class GmmSpec:
    """Gaussian-mixture latent distribution.

    weights must be nonnegative and sum to 1; each covariance must be
    symmetric positive-definite (checked via Cholesky).
    """

    weights: tuple
    means: tuple          # one length-k vector per component
    covariances: tuple    # one k x k matrix per component

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        means = tuple(np.asarray(m, dtype=np.float64) for m in self.means)
        covs = tuple(np.asarray(c, dtype=np.float64) for c in self.covariances)
        if not (len(weights) == len(means) == len(covs)) or not weights:
            raise ValueError("weights, means and covariances must have equal nonzero length")
        if any(w < 0 for w in weights):
            raise ValueError("mixture weights must be nonnegative")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {sum(weights)}")
        k = means[0].shape[0]
        for m, c in zip(means, covs):
            if m.shape != (k,):
                raise ValueError("all component means must share one dimension")
            if c.shape != (k, k):
                raise ValueError("covariances must be k x k")
            if np.max(np.abs(c - c.T)) > 1e-12:
                raise ValueError("covariances must be symmetric")
            try:
                np.linalg.cholesky(c)
            except np.linalg.LinAlgError as exc:
                raise ValueError("covariances must be positive-definite") from exc
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)

    @property
    def k(self) -> int:
        return self.means[0].shape[0]


def default_gmm_spec(k: int = 2) -> GmmSpec:
    """Two balanced unit-covariance components.

    For k=2 the means are (0, 1) and (4, 5); larger k tiles the same pattern
    so sweep worlds stay comparable across latent dimensions.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    reps = (k + 1) // 2
    mu1 = np.tile([0.0, 1.0], reps)[:k]
    mu2 = np.tile([4.0, 5.0], reps)[:k]
    eye = np.eye(k)
    return GmmSpec(weights=(0.5, 0.5), means=(mu1, mu2), covariances=(eye, eye))


@dataclass(frozen=True)
class SyntheticWorld:
    """Ground truth plus observations for one generated dataset.

    ``meta`` records how the world was generated (latent family and its
    parameters) and lands in the serialized manifest.
    """

    z_true: np.ndarray
    labels: np.ndarray
    s_list: tuple     # generation matrices, one per modality
    x_list: tuple     # observed matrices, one per modality
    noise_sigma: float
    seed: int
    meta: dict = None

    @property
    def n(self) -> int:
        return self.z_true.shape[1]

    @property
    def k(self) -> int:
        return self.z_true.shape[0]


def sample_gmm_latents(spec: GmmSpec, n: int, seed: int,
                       stream: int = STREAM_LATENTS):
    """Draw n latent columns from the mixture; returns (k x n matrix,
    component labels)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng_stream(seed, stream)
    labels = rng.choice(len(spec.weights), size=n, p=np.asarray(spec.weights))
    z = np.empty((spec.k, n))
    normals = rng.standard_normal((spec.k, n))
    for c, (mu, cov) in enumerate(zip(spec.means, spec.covariances)):
        idx = labels == c
        if not np.any(idx):
            continue
        chol = np.linalg.cholesky(cov)
        z[:, idx] = mu[:, None] + chol @ normals[:, idx]
    return z, labels.astype(np.int64)


def sample_uniform_boundary_latents(n: int, margin: float = 10.0, seed: int = 0,
                                    x_lo: float = BOUNDARY_X_LO,
                                    x_hi: float = BOUNDARY_X_HI,
                                    stream: int = STREAM_LATENTS):
    """Uniform 2-D latents split by the line y = x - 10.

    Half the points sit above the line and half below, each at a
    perpendicular distance drawn uniformly from (0, margin]. Foot points
    along the line have x uniform in [x_lo, x_hi]. Labels: 0 above, 1 below.
    """
    if n % 2 != 0:
        raise ValueError(f"n must be even, got {n}")
    if n < 2:
        raise ValueError("n must be >= 2")
    if margin <= 0:
        raise ValueError("margin must be > 0")
    rng = rng_stream(seed, stream)
    half = n // 2
    foot_x = rng.uniform(x_lo, x_hi, size=n)
    # Uniform in (0, margin]: flip the half-open side of random().
    offset = (1.0 - rng.random(n)) * margin
    sign = np.concatenate([np.ones(half), -np.ones(half)])
    # Perpendicular direction of y = x - 10 pointing above the line.
    perp = np.array([-1.0, 1.0]) / np.sqrt(2.0)
    base = np.vstack([foot_x, foot_x - 10.0])
    z = base + perp[:, None] * (sign * offset)
    labels = np.concatenate([np.zeros(half), np.ones(half)]).astype(np.int64)
    return z, labels


def random_transform(d_m: int, k: int, lo: float = DEFAULT_TRANSFORM_LO,
                     hi: float = DEFAULT_TRANSFORM_HI, seed: int = 0,
                     stream: int = STREAM_TRANSFORM_BASE) -> np.ndarray:
    """d_m x k generation matrix with i.i.d. uniform entries in [lo, hi]."""
    if d_m < 1 or k < 1:
        raise ValueError("dimensions must be >= 1")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    return rng_stream(seed, stream).uniform(lo, hi, size=(d_m, k))


def generate_modality(s: np.ndarray, z: np.ndarray, noise_sigma: float = 0.0,
                      seed: int = 0, stream: int = STREAM_NOISE_BASE) -> np.ndarray:
    """Observe latents through a generation matrix, optionally with additive
    N(0, noise_sigma^2) noise per entry. The noiseless product is exact."""
    s = as_matrix(s, "s")
    z = as_matrix(z, "z")
    if s.shape[1] != z.shape[0]:
        raise ValueError(f"inner dimensions disagree: {s.shape} vs {z.shape}")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    x = s @ z
    if noise_sigma > 0:
        x = x + noise_sigma * rng_stream(seed, stream).standard_normal(x.shape)
    return x


def pseudo_inverse_encode(s: np.ndarray, x_m: np.ndarray,
                          rank_tolerance: float = 1e-10) -> np.ndarray:
    """Recover latents through the Moore-Penrose pseudo-inverse of a
    ground-truth generation matrix.

    Raises NumericalError when ``s`` is rank-deficient (smallest singular
    value at or below rank_tolerance * sigma_max), since the inverse image
    is then ill-defined.
    """
    s = as_matrix(s, "s")
    x_m = as_matrix(x_m, "x_m")
    if s.shape[0] != x_m.shape[0]:
        raise ValueError(f"row counts disagree: {s.shape} vs {x_m.shape}")
    u, sigma, vt = np.linalg.svd(s, full_matrices=False)
    if sigma[0] == 0.0 or sigma[-1] <= rank_tolerance * sigma[0] or s.shape[1] > s.shape[0]:
        raise NumericalError(
            f"generation matrix is rank-deficient (singular values {sigma})"
        )
    return vt.T @ ((u.T @ x_m) / sigma[:, None])


def make_gmm_world(n: int = 2000, d: tuple = (2, 2), k: int = 2,
                   noise_sigma: float = 0.0, seed: int = 0,
                   spec: GmmSpec = None,
                   lo: float = DEFAULT_TRANSFORM_LO,
                   hi: float = DEFAULT_TRANSFORM_HI) -> SyntheticWorld:
    """Build a Gaussian-mixture world: latents, per-modality transforms and
    observations. ``d`` gives the per-modality observation dimensions."""
    if spec is None:
        spec = default_gmm_spec(k)
    if spec.k != k:
        raise ValueError(f"spec has k={spec.k}, requested k={k}")
    z, labels = sample_gmm_latents(spec, n, seed)
    meta = {
        "family": "gmm",
        "weights": list(spec.weights),
        "means": [m.tolist() for m in spec.means],
        "covariances": [c.tolist() for c in spec.covariances],
        "transform_lo": lo,
        "transform_hi": hi,
    }
    return _observe(z, labels, d, noise_sigma, seed, lo, hi, meta)


def make_boundary_world(n: int = 2000, d: tuple = (2, 2), margin: float = 10.0,
                        noise_sigma: float = 0.0, seed: int = 0,
                        lo: float = DEFAULT_TRANSFORM_LO,
                        hi: float = DEFAULT_TRANSFORM_HI) -> SyntheticWorld:
    """Build the uniform linear-boundary world (k = 2)."""
    z, labels = sample_uniform_boundary_latents(n, margin, seed)
    meta = {
        "family": "boundary",
        "margin": margin,
        "x_lo": BOUNDARY_X_LO,
        "x_hi": BOUNDARY_X_HI,
        "transform_lo": lo,
        "transform_hi": hi,
    }
    return _observe(z, labels, d, noise_sigma, seed, lo, hi, meta)


def _observe(z, labels, d, noise_sigma, seed, lo, hi, meta) -> SyntheticWorld:
    k = z.shape[0]
    s_list = tuple(
        random_transform(d_m, k, lo, hi, seed, stream=STREAM_TRANSFORM_BASE + m)
        for m, d_m in enumerate(d)
    )
    x_list = tuple(
        generate_modality(s, z, noise_sigma, seed, stream=STREAM_NOISE_BASE + m)
        for m, s in enumerate(s_list)
    )
    return SyntheticWorld(z_true=z, labels=labels, s_list=s_list, x_list=x_list,
                          noise_sigma=float(noise_sigma), seed=int(seed),
                          meta=meta)


def save_world(world: SyntheticWorld, directory: str) -> None:
    """Serialize a world to a directory of matrix CSVs plus a manifest."""
    os.makedirs(directory, exist_ok=True)
    matio.save_matrix_csv(os.path.join(directory, "z_true.csv"), world.z_true)
    matio.save_labels(os.path.join(directory, "labels.txt"), world.labels)
    for m, (s, x) in enumerate(zip(world.s_list, world.x_list), start=1):
        matio.save_matrix_csv(os.path.join(directory, f"s{m}.csv"), s)
        matio.save_matrix_csv(os.path.join(directory, f"x{m}.csv"), x)
    manifest = {
        "producer": "palign-synth",
        "n": world.n,
        "k": world.k,
        "d1": world.x_list[0].shape[0],
        "d2": world.x_list[1].shape[0],
        "noise_sigma": world.noise_sigma,
        "seed": world.seed,
    }
    if world.meta:
        manifest["generation"] = world.meta
    matio.save_manifest(os.path.join(directory, "manifest.json"), manifest)


def load_world(directory: str) -> SyntheticWorld:
    manifest = matio.load_manifest(os.path.join(directory, "manifest.json"))
    z = matio.load_matrix_csv(os.path.join(directory, "z_true.csv"))
    labels = matio.load_labels(os.path.join(directory, "labels.txt"))
    s_list = tuple(
        matio.load_matrix_csv(os.path.join(directory, f"s{m}.csv")) for m in (1, 2)
    )
    x_list = tuple(
        matio.load_matrix_csv(os.path.join(directory, f"x{m}.csv")) for m in (1, 2)
    )
    return SyntheticWorld(z_true=z, labels=labels, s_list=s_list, x_list=x_list,
                          noise_sigma=float(manifest["noise_sigma"]),
                          seed=int(manifest["seed"]),
                          meta=manifest.get("generation"))
