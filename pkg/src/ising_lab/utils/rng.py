"""
Seeded random streams.

Every random source is a Philox (counter-based) generator keyed by a 64-bit seed
and a spawn key. Substream ``(i, j, ...)`` of seed ``s`` is
``SeedSequence(s, spawn_key=(i, j, ...))``; chains, runs and batches each take
their own key so results never depend on scheduling order.
"""
from typing import Union

import numpy as np

from src.ising_lab.errors import InvalidInputError

RandomSource = Union[int, np.random.Generator]

SEED_LIMIT = 2 ** 64


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise InvalidInputError(f"seed {seed} must be a 64-bit unsigned integer")
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(sequence))


def as_rng(source: RandomSource, *stream: int) -> np.random.Generator:
    if isinstance(source, np.random.Generator):
        return source
    return make_rng(source, *stream)


def child_seed(rng: np.random.Generator) -> int:
    """Draws a fresh 64-bit seed from ``rng`` for handing to a worker."""
    return int(rng.integers(0, SEED_LIMIT, dtype=np.uint64))
