"""Seeded, splittable random streams.

Every stochastic routine takes an integer root seed. Independent sub-streams
are derived with ``numpy.random.SeedSequence(root, spawn_key=(i,))``, which
hashes the pair (root seed, i) into the PCG64 state. Sharded work therefore
reproduces exactly regardless of how shards are scheduled.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    if seed is None:
        raise ValueError("a seed is required")
    if stream is None:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    return substream(seed, stream)


def substream(seed: int, i: int) -> np.random.Generator:
    """Generator for sub-stream ``i`` of root ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(i),))
    return np.random.Generator(np.random.PCG64(ss))


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` fair binary digits as a uint8 array."""
    if n <= 0:
        return np.zeros(0, dtype=np.uint8)
    raw = rng.bytes((n + 7) // 8)
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n]


def random_int_bits(rng: np.random.Generator, width: int) -> int:
    """A uniformly random integer in ``[0, 2**width)``."""
    if width <= 0:
        return 0
    nbytes = (width + 7) // 8
    value = int.from_bytes(rng.bytes(nbytes), "big")
    return value >> (8 * nbytes - width)
