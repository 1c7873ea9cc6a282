"""Seed fan-out: one run seed, many independent named random streams.

Sub-stream seeds come from a SplitMix64 mix of the run seed and a 64-bit
FNV-1a hash of the stream name; each stream is a numpy PCG64 generator.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


def derive_seed(seed: int, name: str) -> int:
    return splitmix64((seed & _MASK) ^ _fnv1a64(name))


class RngStreams:
    """Named, reproducible generators derived from a single seed.

    >>> s = RngStreams(42)
    >>> s.get("init") is s.get("init")
    True
    """

    STANDARD = ("init", "dropout", "masking", "shuffling", "split")

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            self._streams[name] = self.fresh(name)
        return self._streams[name]

    def fresh(self, name: str) -> np.random.Generator:
        """A new generator at the start of stream ``name`` (not cached)."""
        return np.random.Generator(np.random.PCG64(derive_seed(self.seed, name)))

    def seeds(self) -> dict[str, int]:
        return {name: derive_seed(self.seed, name) for name in self.STANDARD}
