"""Tests for consecutive output partitions."""

import math

import pytest

from adaptivereadout.core.errors import ModelValidationError
from adaptivereadout.structs.partition import (
    Partition,
    count_partitions,
    enumerate_partitions,
    is_refinement,
)


class TestPartition:
    """Test Partition class."""

    def test_bins(self) -> None:
        """Test half-open bin ranges."""
        partition = Partition((2, 5), 8)
        assert partition.num_bins == 3
        assert partition.bins() == [(0, 2), (2, 5), (5, 8)]
        assert partition.starts == [0, 2, 5]

    def test_label(self) -> None:
        """Test compact labels with single-output bins."""
        assert Partition((1, 4), 6).label() == "0;1-3;4-5"
        assert Partition.single_bin(3).label() == "0-2"

    def test_singletons(self) -> None:
        """Test the finest partition."""
        partition = Partition.singletons(4)
        assert partition.num_bins == 4
        assert partition.bins() == [(0, 1), (1, 2), (2, 3), (3, 4)]

    def test_boundaries_must_increase(self) -> None:
        """Test that repeated or decreasing cuts are rejected."""
        with pytest.raises(ModelValidationError, match="strictly increasing"):
            Partition((3, 3), 6)
        with pytest.raises(ModelValidationError):
            Partition((4, 2), 6)

    def test_boundaries_in_range(self) -> None:
        """Test that cuts at 0 or num_outputs are rejected."""
        with pytest.raises(ModelValidationError):
            Partition((0,), 4)
        with pytest.raises(ModelValidationError):
            Partition((4,), 4)

    def test_json_round_trip(self) -> None:
        """Test to_json / from_json."""
        partition = Partition((1, 7), 16)
        assert Partition.from_json(partition.to_json()) == partition


class TestEnumeration:
    """Test partition counting and enumeration."""

    def test_count_matches_binomial(self) -> None:
        """Test C(15, 3) = 455 partitions of 16 outputs into 4 bins."""
        assert count_partitions(16, 4) == 455
        assert count_partitions(16, 4) == math.comb(15, 3)

    def test_enumeration_matches_count(self) -> None:
        """Test that enumeration yields exactly the counted partitions."""
        partitions = list(enumerate_partitions(16, 4))
        assert len(partitions) == 455
        assert len(set(p.boundaries for p in partitions)) == 455

    def test_lexicographic_order(self) -> None:
        """Test the boundary order of enumeration."""
        boundaries = [p.boundaries for p in enumerate_partitions(4, 3)]
        assert boundaries == [(1, 2), (1, 3), (2, 3)]

    def test_one_bin(self) -> None:
        """Test that n_b = 1 gives the single all-outputs bin."""
        partitions = list(enumerate_partitions(5, 1))
        assert len(partitions) == 1
        assert partitions[0].bins() == [(0, 5)]

    def test_invalid_bin_count(self) -> None:
        """Test that n_b must lie within 1..|Y|."""
        with pytest.raises(ModelValidationError):
            list(enumerate_partitions(4, 0))
        with pytest.raises(ModelValidationError):
            list(enumerate_partitions(4, 5))

    def test_refinement(self) -> None:
        """Test the refinement relation."""
        fine = Partition((1, 3, 5), 8)
        coarse = Partition((3,), 8)
        assert is_refinement(fine, coarse)
        assert not is_refinement(coarse, fine)
        assert is_refinement(Partition.singletons(8), fine)
