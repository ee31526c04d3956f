"""Tests for random number generator."""

import numpy as np

from adaptivereadout.utils.random import Random


class TestRandom:
    """Test Random class."""

    def test_create_with_seed(self) -> None:
        """Test creating random with specific seed."""
        rng = Random(seed=42)
        assert rng.seed == 42

    def test_create_without_seed(self) -> None:
        """Test creating random without seed uses timestamp."""
        rng = Random()
        assert rng.seed > 0

    def test_block_deterministic(self) -> None:
        """Test that same seed produces same blocks."""
        rng1 = Random(seed=42)
        rng2 = Random(seed=42)
        assert np.array_equal(rng1.uniform_block(8, 6), rng2.uniform_block(8, 6))

    def test_block_shape_and_range(self) -> None:
        """Test that blocks hold values in [0, 1)."""
        block = Random(seed=42).uniform_block(100, 4)
        assert block.shape == (100, 4)
        assert np.all((block >= 0.0) & (block < 1.0))

    def test_blocks_continue_the_stream(self) -> None:
        """Test that two half blocks equal one full block."""
        whole = Random(seed=9).uniform_block(10, 3)
        rng = Random(seed=9)
        halves = np.vstack([rng.uniform_block(5, 3), rng.uniform_block(5, 3)])
        assert np.array_equal(whole, halves)

    def test_different_seeds(self) -> None:
        """Test that different seeds produce different sequences."""
        assert not np.array_equal(
            Random(seed=42).uniform_block(4, 4), Random(seed=43).uniform_block(4, 4)
        )


class TestCategorical:
    """Test inverse-CDF sampling."""

    def test_boundaries(self) -> None:
        """Test which category each uniform lands in."""
        cumulative = np.cumsum([0.2, 0.5, 0.3])
        assert Random.categorical(cumulative, 0.0) == 0
        assert Random.categorical(cumulative, 0.19) == 0
        assert Random.categorical(cumulative, 0.2) == 1
        assert Random.categorical(cumulative, 0.69) == 1
        assert Random.categorical(cumulative, 0.99) == 2

    def test_zero_probability_skipped(self) -> None:
        """Test that empty categories are never drawn."""
        cumulative = np.cumsum([0.0, 1.0, 0.0])
        for u in (0.0, 0.5, 0.999999):
            assert Random.categorical(cumulative, u) == 1

    def test_unnormalized_total(self) -> None:
        """Test that round-off in the last cumulative value is absorbed."""
        cumulative = np.array([0.5, 1.0 - 1e-13])
        assert Random.categorical(cumulative, 0.9999999999999) == 1
