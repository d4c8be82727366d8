"""Deterministic random streams.

All randomness in the package flows through :func:`rng_stream`, a
counter-based Philox generator keyed by ``(seed, stream)``. Each matrix a
caller draws (latents, per-modality transforms, per-modality noise, weight
init, shuffling, splits) gets its own stream id, so worlds are bit-identical
across platforms and independent of draw order.
"""

import numpy as np

# Stream ids, one per kind of matrix drawn from a given seed.
STREAM_LATENTS = 0
STREAM_TRANSFORM_BASE = 1   # + modality index (0 or 1)
STREAM_NOISE_BASE = 3       # + modality index
STREAM_INIT = 5             # contrastive weight init
STREAM_SHUFFLE = 6          # mini-batch shuffling
STREAM_SPLIT = 7            # train/holdout splits


def rng_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the Philox generator for substream ``stream`` of ``seed``."""
    key = np.array([seed % 2**64, stream % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
