"""Seeded, counter-based random streams.

Every public entry point of this package takes an integer seed. Internally,
independent streams are derived from (seed, index path) with Philox, a
counter-based 64-bit generator, so that per-chain / per-particle streams are
reproducible regardless of execution order or worker count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream"]


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for stream `path` under `seed`.

    The same (seed, path) always yields the same stream; distinct paths give
    statistically independent streams.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
