"""Seeded counter-based random number generator for reproducible trajectories.

Wraps numpy's Philox bit generator so that a seed fully determines every
sampled trajectory, independent of platform and worker schedule.
"""

from __future__ import annotations

import time
from typing import Optional

import numpy as np


class Random:
    """Seeded generator built on ``numpy.random.Philox``.

    Attributes:
        seed: Seed in use (drawn from the clock when none was given)
    """

    def __init__(self, seed: Optional[int] = None) -> None:
        """Initialize random generator with optional seed.

        Args:
            seed: Initial seed value. If None, uses current timestamp.
        """
        self.seed = int(time.time() * 1000) if seed is None else int(seed)
        self._generator = np.random.Generator(np.random.Philox(self.seed))

    def uniform_block(self, rows: int, cols: int) -> np.ndarray:
        """Block of uniforms in [0, 1), shape (rows, cols)."""
        return self._generator.random((rows, cols))

    @staticmethod
    def categorical(cumulative: np.ndarray, u: float) -> int:
        """Inverse-CDF draw from a cumulative distribution.

        Args:
            cumulative: Nondecreasing cumulative probabilities ending near 1
            u: Uniform variate in [0, 1)
        """
        index = int(np.searchsorted(cumulative, u * cumulative[-1], side="right"))
        return min(index, len(cumulative) - 1)
