"""Contrastive baseline: loss values against an independent softmax
cross-entropy oracle, analytic gradients against central finite
differences, and training-loop contracts."""

import math

import numpy as np
import pytest

from palign import (
    AlignmentProblem,
    ContrastiveConfig,
    NumericalError,
    cmae,
    encode,
    info_nce_loss,
    make_gmm_world,
    solve_alignment,
    train_linear_contrastive,
)
from palign.contrastive import info_nce_map_grads
from palign.rng import STREAM_INIT, rng_stream


def _oracle_info_nce(z1, z2, temperature):
    """Straightforward per-pair softmax cross-entropy recomputation."""
    b = z1.shape[1]
    u = z1 / np.linalg.norm(z1, axis=0)
    v = z2 / np.linalg.norm(z2, axis=0)
    total = 0.0
    for i in range(b):
        logits = np.array([float(u[:, i] @ v[:, j]) / temperature for j in range(b)])
        total += -logits[i] + math.log(np.sum(np.exp(logits)))
    for j in range(b):
        logits = np.array([float(u[:, i] @ v[:, j]) / temperature for i in range(b)])
        total += -logits[j] + math.log(np.sum(np.exp(logits)))
    return total / (2 * b)


def test_loss_vanishes_for_identical_orthonormal_columns():
    z = np.eye(2)
    assert info_nce_loss(z, z, temperature=0.01) <= 1e-12


def test_loss_is_ln2_for_indistinguishable_pairs():
    z = np.ones((2, 2))
    assert info_nce_loss(z, z, temperature=0.37) == pytest.approx(math.log(2.0), abs=1e-12)


def test_loss_matches_oracle_on_random_batch():
    rng = np.random.default_rng(0)
    z1 = rng.standard_normal((4, 8))
    z2 = rng.standard_normal((4, 8))
    ours = info_nce_loss(z1, z2, temperature=0.5)
    assert ours == pytest.approx(_oracle_info_nce(z1, z2, 0.5), abs=1e-10)


def test_loss_rejects_zero_column():
    z1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    z2 = np.ones((2, 2))
    with pytest.raises(ValueError):
        info_nce_loss(z1, z2, temperature=0.5)


def test_loss_rejects_single_column_batch():
    with pytest.raises(ValueError):
        info_nce_loss(np.ones((2, 1)), np.ones((2, 1)), temperature=0.5)


# ---------------------------------------------------------------------------
# gradient checks
# ---------------------------------------------------------------------------

def _fd_gradient(f, x, h=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        step = np.zeros_like(x)
        step[idx] = h
        g[idx] = (f(x + step) - f(x - step)) / (2 * h)
    return g


@pytest.mark.parametrize("seed", range(3))
def test_latent_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(700 + seed)
    z1 = rng.standard_normal((3, 4))
    z2 = rng.standard_normal((3, 4))
    tau = 0.5
    from palign.contrastive import _loss_and_latent_grads
    _, dz1, dz2 = _loss_and_latent_grads(z1, z2, tau)
    fd1 = _fd_gradient(lambda z: info_nce_loss(z, z2, tau), z1)
    fd2 = _fd_gradient(lambda z: info_nce_loss(z1, z, tau), z2)
    assert np.linalg.norm(dz1 - fd1) / np.linalg.norm(fd1) < 1e-5
    assert np.linalg.norm(dz2 - fd2) / np.linalg.norm(fd2) < 1e-5


def test_map_gradients_match_finite_differences():
    rng = np.random.default_rng(55)
    x1 = rng.standard_normal((2, 4))
    x2 = rng.standard_normal((3, 4))
    a1 = rng.standard_normal((3, 2))
    a2 = rng.standard_normal((3, 3))
    tau = 0.25
    _, da1, da2 = info_nce_map_grads(a1, a2, x1, x2, tau)
    fd1 = _fd_gradient(lambda a: info_nce_map_grads(a, a2, x1, x2, tau)[0], a1)
    fd2 = _fd_gradient(lambda a: info_nce_map_grads(a1, a, x1, x2, tau)[0], a2)
    assert np.linalg.norm(da1 - fd1) / np.linalg.norm(fd1) < 1e-5
    assert np.linalg.norm(da2 - fd2) / np.linalg.norm(fd2) < 1e-5


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

def _small_world(seed=0, n=64):
    return make_gmm_world(n=n, d=(2, 2), k=2, seed=seed)


def test_zero_epochs_returns_initialization():
    world = _small_world()
    config = ContrastiveConfig(k=2, epochs=0, batch_size=None, seed=3)
    a1, a2, history = train_linear_contrastive(*world.x_list, config)
    assert history == []
    init = rng_stream(3, STREAM_INIT)
    expected_a1 = 0.1 * init.standard_normal((2, 2))
    expected_a2 = 0.1 * init.standard_normal((2, 2))
    assert np.array_equal(a1, expected_a1)
    assert np.array_equal(a2, expected_a2)


def test_training_deterministic_per_seed():
    world = _small_world()
    config = ContrastiveConfig(k=2, epochs=5, batch_size=32, seed=7)
    r1 = train_linear_contrastive(*world.x_list, config)
    r2 = train_linear_contrastive(*world.x_list, config)
    assert np.array_equal(r1[0], r2[0])
    assert np.array_equal(r1[1], r2[1])
    assert r1[2] == r2[2]


def test_full_batch_small_lr_is_monotone():
    world = _small_world()
    config = ContrastiveConfig(k=2, temperature=0.5, learning_rate=1e-4,
                               epochs=50, batch_size=None, seed=0,
                               lr_schedule="constant")
    _, _, history = train_linear_contrastive(*world.x_list, config)
    assert len(history) == 50
    diffs = np.diff(history)
    assert np.all(diffs <= 1e-12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_raises_with_epoch_index():
    world = _small_world()
    config = ContrastiveConfig(k=2, learning_rate=1e308, epochs=10,
                               batch_size=None, seed=0, lr_schedule="constant")
    with pytest.raises(NumericalError, match="epoch"):
        train_linear_contrastive(*world.x_list, config)


def test_batch_size_larger_than_n_rejected():
    world = _small_world(n=32)
    config = ContrastiveConfig(k=2, batch_size=64)
    with pytest.raises(ValueError):
        train_linear_contrastive(*world.x_list, config)


def test_config_validation():
    with pytest.raises(ValueError):
        ContrastiveConfig(k=0)
    with pytest.raises(ValueError):
        ContrastiveConfig(k=2, temperature=0.0)
    with pytest.raises(ValueError):
        ContrastiveConfig(k=2, learning_rate=-1.0)
    with pytest.raises(ValueError):
        ContrastiveConfig(k=2, lr_schedule="cosine")


@pytest.mark.parametrize("seed", range(2))
def test_exact_solver_dominates_baseline(seed):
    world = make_gmm_world(n=512, d=(2, 2), k=2, seed=seed)
    sol = solve_alignment(AlignmentProblem(world.x_list[0], world.x_list[1], 2))
    pa_gap = cmae(encode(sol.a1, world.x_list[0]), encode(sol.a2, world.x_list[1]))
    config = ContrastiveConfig(k=2, epochs=40, batch_size=256, seed=seed)
    a1, a2, _ = train_linear_contrastive(*world.x_list, config)
    baseline_gap = cmae(a1 @ world.x_list[0], a2 @ world.x_list[1])
    assert pa_gap < baseline_gap
    assert baseline_gap >= 1e6 * pa_gap
