"""
Seeded RNG - Reproducible random streams for every stochastic operation.

All randomness in the package flows through ``SeededRng``. The generator
is numpy's PCG64 (128-bit permuted congruential generator, XSL-RR output),
seeded through ``SeedSequence``; the bit stream for a given seed is the
same on every platform numpy supports.
"""

import hashlib
from typing import Optional, Sequence, Tuple, Union

import numpy as np


ALGORITHM = "PCG64"

SpawnKey = Union[int, str]


def _key_to_int(key: SpawnKey) -> int:
    if isinstance(key, int):
        if key < 0:
            raise ValueError("spawn keys must be non-negative")
        return key
    # Stable across interpreter runs, unlike hash().
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class SeededRng:
    """
    Thin wrapper over a PCG64 ``numpy.random.Generator``.

    Instances are cheap; derive independent substreams with ``spawn``
    instead of sharing one stream between unrelated consumers.
    """

    def __init__(self, seed: int, path: Tuple[int, ...] = ()):
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.path = tuple(path)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    @property
    def algorithm(self) -> str:
        return ALGORITHM

    def spawn(self, key: SpawnKey) -> "SeededRng":
        """Return a child stream identified by ``key``; independent of draws made here."""
        return SeededRng(self.seed, self.path + (_key_to_int(key),))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def random(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None) -> np.ndarray:
        return self.generator.normal(loc, scale, size)

    def integers(self, low: int, high: Optional[int] = None, size=None) -> np.ndarray:
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice(self, options: Sequence, size=None, replace: bool = True):
        return self.generator.choice(options, size=size, replace=replace)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, path={self.path})"


__all__ = ["ALGORITHM", "SeededRng"]
