"""Seeded random streams.

A thin wrapper over ``numpy.random.Generator`` (PCG64). numpy's gamma
generator is rejection based (Marsaglia-Tsang for shape >= 1, a
Johnk/Ahrens-Dieter style scheme below 1), so its variates are exact in
distribution.
"""
from __future__ import annotations

import numpy as np


class RandomSource:
    """Seeded stream of uniforms in (0, 1), gammas and normals.

    Two sources built from the same seed return identical values
    call-for-call.
    """

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self.seed_sequence = seed
        else:
            seed = int(seed)
            if not 0 <= seed < 2**64:
                raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
            self.seed_sequence = np.random.SeedSequence(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed_sequence))

    @classmethod
    def for_worker(cls, seed: int, worker: int) -> RandomSource:
        """Independent stream for shard ``worker`` of a run seeded with ``seed``."""
        return cls(np.random.SeedSequence([int(seed), int(worker)]))

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def uniforms(self, size: int) -> np.ndarray:
        u = self._gen.random(size)
        # random() is on [0, 1); redraw exact zeros
        zero = u == 0.0
        while zero.any():
            u[zero] = self._gen.random(int(zero.sum()))
            zero = u == 0.0
        return u

    def gamma(self, shape: float, rate: float, size: int | None = None):
        if shape <= 0.0 or rate <= 0.0:
            raise ValueError("gamma needs shape > 0 and rate > 0")
        return self._gen.gamma(shape, 1.0 / rate, size)

    def normals(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)
