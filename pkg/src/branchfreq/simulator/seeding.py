"""Per-replicate seed derivation.

Replicate ``r`` of a run with master seed ``s`` uses the generator seeded with
``mix64(s, r)``, so any replicate can be regenerated on its own and results do
not depend on how replicates are scheduled across workers.
"""

from __future__ import annotations

import numpy as np

GENERATOR = "numpy.PCG64"

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """SplitMix64 output function (Steele, Lea and Flood 2014)."""
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix64(seed: int, index: int) -> int:
    """Derive a 64-bit stream seed from a master seed and a counter."""
    return splitmix64(splitmix64(seed & _MASK) ^ ((index * _GOLDEN) & _MASK))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & _MASK))


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    return make_rng(mix64(seed, index))
