"""Counter-based random streams for order-independent Monte Carlo runs.

Every stochastic component takes its randomness from a stream derived
from (seed, *path), where the path encodes trial / user / step indices.
Streams with different paths are statistically independent, so trials
can run in any order (or in parallel) without changing results.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "as_generator"]


def substream(seed: int, *path: int) -> np.random.Generator:
    """Derive an independent generator for (seed, *path).

    Uses the counter-based Philox bit generator keyed by a SeedSequence
    over the full path, so the mapping is stable across runs and
    platforms.
    """
    entropy = (int(seed),) + tuple(int(p) for p in path)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def as_generator(seed_or_rng) -> np.random.Generator:
    """Accept either an integer seed or an existing Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return substream(int(seed_or_rng))
