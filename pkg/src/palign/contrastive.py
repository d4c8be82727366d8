"""Linear contrastive alignment baseline.

Trains one linear map per modality by plain gradient descent on a symmetric
InfoNCE objective over cosine similarities. This is the learned-alignment
comparison point for the closed-form solver: it aligns latent directions
well but, lacking any magnitude constraint, leaves a large unnormalized
cross-modal gap.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .rng import STREAM_INIT, STREAM_SHUFFLE, rng_stream
from .solver import as_matrix


@dataclass(frozen=True)
class ContrastiveConfig:
    """Training hyperparameters.

    ``batch_size=None`` trains full-batch. ``lr_schedule`` is either
    ``"constant"`` or ``"linear"`` (decay to zero over the run); plain
    descent with a linear schedule reaches a far lower noise floor than a
    constant rate. Full-batch descent with a constant rate is observed to
    be monotone for learning rates up to about 1e-3 on unit-scale data;
    beyond that there is no monotonicity guarantee.
    """

    k: int
    temperature: float = 0.5
    learning_rate: float = 0.03
    epochs: int = 300
    batch_size: int = 512
    seed: int = 0
    init_scale: float = 0.1
    lr_schedule: str = "linear"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size is not None and self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be > 0")
        if self.lr_schedule not in ("constant", "linear"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "temperature": self.temperature,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "init_scale": self.init_scale,
            "lr_schedule": self.lr_schedule,
        }


def _loss_and_latent_grads(z1: np.ndarray, z2: np.ndarray, temperature: float):
    """Symmetric InfoNCE loss and its gradients w.r.t. the raw latents.

    Columns are L2-normalized internally; logits are scaled cosine
    similarities and each direction is a softmax cross-entropy against the
    matching index.
    """
    b = z1.shape[1]
    n1 = np.linalg.norm(z1, axis=0)
    n2 = np.linalg.norm(z2, axis=0)
    u = z1 / n1
    v = z2 / n2
    s = (u.T @ v) / temperature

    row_max = s.max(axis=1, keepdims=True)
    p = np.exp(s - row_max)
    row_sum = p.sum(axis=1, keepdims=True)
    p /= row_sum
    col_max = s.max(axis=0, keepdims=True)
    q = np.exp(s - col_max)
    col_sum = q.sum(axis=0, keepdims=True)
    q /= col_sum

    diag = np.diagonal(s)
    lse_rows = np.log(row_sum[:, 0]) + row_max[:, 0]
    lse_cols = np.log(col_sum[0]) + col_max[0]
    loss = 0.5 * (np.mean(lse_rows - diag) + np.mean(lse_cols - diag))

    g = (p + q - 2.0 * np.eye(b)) / (2.0 * b)
    du = (v @ g.T) / temperature
    dv = (u @ g) / temperature
    dz1 = (du - u * np.sum(u * du, axis=0)) / n1
    dz2 = (dv - v * np.sum(v * dv, axis=0)) / n2
    return float(loss), dz1, dz2


def info_nce_loss(z1_hat: np.ndarray, z2_hat: np.ndarray, temperature: float) -> float:
    """Symmetric InfoNCE over a batch of paired latent columns."""
    z1_hat = as_matrix(z1_hat, "z1_hat")
    z2_hat = as_matrix(z2_hat, "z2_hat")
    if z1_hat.shape != z2_hat.shape:
        raise ValueError(f"shapes differ: {z1_hat.shape} vs {z2_hat.shape}")
    if z1_hat.shape[1] < 2:
        raise ValueError("need a batch of at least 2 columns")
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    if np.any(np.linalg.norm(z1_hat, axis=0) == 0.0) or np.any(
        np.linalg.norm(z2_hat, axis=0) == 0.0
    ):
        raise ValueError("zero-norm latent column cannot be normalized")
    loss, _, _ = _loss_and_latent_grads(z1_hat, z2_hat, temperature)
    return loss


def info_nce_map_grads(a1: np.ndarray, a2: np.ndarray, x1: np.ndarray,
                       x2: np.ndarray, temperature: float):
    """Loss plus gradients w.r.t. the two linear maps (chain rule through
    the encodings). Exposed for gradient checking."""
    z1 = a1 @ x1
    z2 = a2 @ x2
    loss, dz1, dz2 = _loss_and_latent_grads(z1, z2, temperature)
    return loss, dz1 @ x1.T, dz2 @ x2.T


def train_linear_contrastive(x1: np.ndarray, x2: np.ndarray,
                             config: ContrastiveConfig):
    """Gradient-descent training of the two linear maps.

    Returns ``(a1, a2, loss_history)`` where ``loss_history`` holds one
    entry per epoch: the full-batch loss before that epoch's update when
    training full-batch, otherwise the mean mini-batch loss. Deterministic
    for a fixed config. Raises NumericalError (with the epoch index) if the
    loss stops being finite.
    """
    x1 = as_matrix(x1, "x1")
    x2 = as_matrix(x2, "x2")
    n = x1.shape[1]
    if x2.shape[1] != n:
        raise ValueError(f"paired columns required, got {n} and {x2.shape[1]}")
    if config.batch_size is not None and config.batch_size > n:
        raise ValueError(f"batch_size {config.batch_size} exceeds n={n}")

    init = rng_stream(config.seed, STREAM_INIT)
    a1 = config.init_scale * init.standard_normal((config.k, x1.shape[0]))
    a2 = config.init_scale * init.standard_normal((config.k, x2.shape[0]))
    shuffle = rng_stream(config.seed, STREAM_SHUFFLE)

    batch = n if config.batch_size is None else config.batch_size
    history = []
    for epoch in range(config.epochs):
        lr = config.learning_rate
        if config.lr_schedule == "linear":
            lr *= 1.0 - epoch / config.epochs
        if batch == n:
            batches = [np.arange(n)]
        else:
            perm = shuffle.permutation(n)
            batches = [perm[s:s + batch] for s in range(0, n - batch + 1, batch)]
        epoch_loss = 0.0
        for idx in batches:
            # divergence shows up as overflow/nan here and is raised below
            with np.errstate(over="ignore", invalid="ignore"):
                loss, da1, da2 = info_nce_map_grads(
                    a1, a2, x1[:, idx], x2[:, idx], config.temperature)
                if not np.isfinite(loss):
                    raise NumericalError(f"training loss diverged at epoch {epoch}")
                a1 = a1 - lr * da1
                a2 = a2 - lr * da2
            epoch_loss += loss
        history.append(epoch_loss / len(batches))
    return a1, a2, history
