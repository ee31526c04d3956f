"""Consecutive-integer partitions of the photon-count output space."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

from adaptivereadout.core.errors import ModelValidationError


@dataclass(frozen=True)
class Partition:
    """Partition of outputs ``0..num_outputs-1`` into consecutive bins.

    Bin ``i`` covers ``[cut[i-1], cut[i])`` with implicit cuts at 0 and
    ``num_outputs``.

    Attributes:
        boundaries: Strictly increasing cut points in ``1..num_outputs-1``
        num_outputs: Size of the partitioned output space
    """

    boundaries: Tuple[int, ...]
    num_outputs: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "boundaries", tuple(int(b) for b in self.boundaries))
        if self.num_outputs < 1:
            raise ModelValidationError("partition needs at least one output")
        previous = 0
        for cut in self.boundaries:
            if cut <= previous or cut >= self.num_outputs:
                raise ModelValidationError(
                    f"boundaries {list(self.boundaries)} must be strictly increasing "
                    f"within 1..{self.num_outputs - 1}"
                )
            previous = cut

    @classmethod
    def singletons(cls, num_outputs: int) -> Partition:
        """Every output in its own bin."""
        return cls(tuple(range(1, num_outputs)), num_outputs)

    @classmethod
    def single_bin(cls, num_outputs: int) -> Partition:
        return cls((), num_outputs)

    @classmethod
    def from_json(cls, data: Dict[str, object]) -> Partition:
        return cls(tuple(data["boundaries"]), int(data["num_outputs"]))  # type: ignore[arg-type]

    def to_json(self) -> Dict[str, object]:
        return {"boundaries": list(self.boundaries), "num_outputs": self.num_outputs}

    @property
    def num_bins(self) -> int:
        return len(self.boundaries) + 1

    @property
    def starts(self) -> List[int]:
        """First output of every bin."""
        return [0, *self.boundaries]

    def bins(self) -> List[Tuple[int, int]]:
        """Half-open output ranges ``(start, stop)`` of every bin."""
        edges = [0, *self.boundaries, self.num_outputs]
        return list(zip(edges[:-1], edges[1:]))

    def label(self) -> str:
        return ";".join(f"{a}-{b - 1}" if b - a > 1 else str(a) for a, b in self.bins())


def count_partitions(num_outputs: int, num_bins: int) -> int:
    """Number of consecutive partitions, ``C(num_outputs-1, num_bins-1)``."""
    return math.comb(num_outputs - 1, num_bins - 1)


def enumerate_partitions(num_outputs: int, num_bins: int) -> Iterator[Partition]:
    """Yield every consecutive partition in lexicographic boundary order.

    Raises:
        ModelValidationError: If ``num_bins`` is not in ``1..num_outputs``
    """
    if not 1 <= num_bins <= num_outputs:
        raise ModelValidationError(f"n_b={num_bins} must be within 1..{num_outputs}")
    for cuts in itertools.combinations(range(1, num_outputs), num_bins - 1):
        yield Partition(cuts, num_outputs)


def is_refinement(fine: Partition, coarse: Partition) -> bool:
    """True if every boundary of ``coarse`` is also a boundary of ``fine``."""
    return fine.num_outputs == coarse.num_outputs and set(coarse.boundaries) <= set(
        fine.boundaries
    )
