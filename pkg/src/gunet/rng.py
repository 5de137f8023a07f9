"""Deterministic random streams.

Built on the counter-based Philox generator so that a (seed, spawn_key)
pair yields the identical stream on every platform. ``child(i)`` derives
an independent stream, used for per-sample network builds in the spectral
sweep and per-iteration batch sampling in training.
"""

from __future__ import annotations

import numpy as np


class Rng:
    def __init__(self, seed: int, spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in spawn_key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "Rng":
        return Rng(self.seed, self.spawn_key + (int(index),))

    def normal(self, shape=None, std: float = 1.0) -> np.ndarray:
        return std * self._gen.standard_normal(shape)

    def uniform(self, low: float = 0.0, high: float = 1.0, shape=None) -> np.ndarray:
        return self._gen.uniform(low, high, shape)

    def integers(self, low: int, high: int, shape=None):
        return self._gen.integers(low, high, size=shape)

    def choice(self, n: int, k: int) -> np.ndarray:
        """k distinct indices drawn from range(n)."""
        return self._gen.choice(n, size=k, replace=False)

    def __repr__(self):
        return f"Rng(seed={self.seed}, spawn_key={self.spawn_key})"
