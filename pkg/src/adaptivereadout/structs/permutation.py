"""Permutations of physical levels and the action sets built from them."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Iterator, List, Sequence, Tuple

import numpy as np

from adaptivereadout.core.errors import ModelValidationError

if TYPE_CHECKING:
    from adaptivereadout.core.types import ExpandedHmm


@dataclass(frozen=True)
class Permutation:
    """A bijection on physical levels, stored as an index map.

    ``mapping[s]`` is the level that population in ``s`` is moved to.

    Attributes:
        mapping: Image of each level
        name: Display / serialization name
    """

    mapping: Tuple[int, ...]
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "mapping", tuple(int(v) for v in self.mapping))
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ModelValidationError(
                f"permutation {self.name or self.mapping} is not a bijection on "
                f"0..{len(self.mapping) - 1}"
            )
        if not self.name:
            object.__setattr__(self, "name", "identity" if self.is_identity else self._auto_name())

    def _auto_name(self) -> str:
        moved = [s for s, t in enumerate(self.mapping) if s != t]
        if len(moved) == 2:
            return f"swap_{moved[0]}_{moved[1]}"
        return "perm_" + "_".join(str(v) for v in self.mapping)

    @classmethod
    def identity(cls, size: int) -> Permutation:
        return cls(tuple(range(size)), "identity")

    @classmethod
    def transposition(cls, size: int, i: int, j: int) -> Permutation:
        """Swap levels i and j."""
        if i == j or not (0 <= i < size and 0 <= j < size):
            raise ModelValidationError(f"invalid transposition ({i}, {j}) on {size} levels")
        mapping = list(range(size))
        mapping[i], mapping[j] = j, i
        lo, hi = sorted((i, j))
        return cls(tuple(mapping), f"swap_{lo}_{hi}")

    @classmethod
    def from_swaps(cls, size: int, swaps: Sequence[Sequence[int]], name: str = "") -> Permutation:
        """Compose transpositions, applying them in list order.

        Example:
            >>> Permutation.from_swaps(8, [[7, 2], [2, 5], [5, 0]]).mapping[7]
            0
        """
        perm = cls.identity(size)
        for pair in swaps:
            if len(pair) != 2:
                raise ModelValidationError(f"swap {list(pair)} must name two levels")
            perm = cls.transposition(size, int(pair[0]), int(pair[1])).after(perm)
        return cls(perm.mapping, name)

    @property
    def size(self) -> int:
        return len(self.mapping)

    @property
    def is_identity(self) -> bool:
        return all(s == t for s, t in enumerate(self.mapping))

    def after(self, other: Permutation) -> Permutation:
        """Composition ``self ∘ other`` (apply ``other`` first)."""
        if other.size != self.size:
            raise ModelValidationError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.mapping[t] for t in other.mapping))

    def inverse(self, name: str = "") -> Permutation:
        inv = [0] * self.size
        for s, t in enumerate(self.mapping):
            inv[t] = s
        return Permutation(tuple(inv), name)

    def __call__(self, state: int) -> int:
        return self.mapping[state]


@dataclass(frozen=True)
class ActionSet:
    """Ordered set of permutations available between readout steps.

    The identity is always stored at index 0 so that "no permutation" and
    lowest-index tie-breaking coincide.

    Attributes:
        actions: Permutations, identity first, no duplicates
    """

    actions: Tuple[Permutation, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        if not self.actions:
            raise ModelValidationError("action set is empty")
        if not self.actions[0].is_identity:
            raise ModelValidationError("action set must start with the identity")
        sizes = {p.size for p in self.actions}
        if len(sizes) != 1:
            raise ModelValidationError(f"actions act on different level counts: {sorted(sizes)}")
        mappings = [p.mapping for p in self.actions]
        if len(set(mappings)) != len(mappings):
            raise ModelValidationError("action set contains duplicate permutations")
        names = [p.name for p in self.actions]
        if len(set(names)) != len(names):
            raise ModelValidationError("action set contains duplicate names")

    @classmethod
    def build(cls, num_states: int, perms: Sequence[Permutation]) -> ActionSet:
        """Identity followed by ``perms``, skipping duplicates of earlier entries."""
        chosen: List[Permutation] = [Permutation.identity(num_states)]
        seen = {chosen[0].mapping}
        for perm in perms:
            if perm.size != num_states:
                raise ModelValidationError(
                    f"permutation '{perm.name}' acts on {perm.size} levels, expected {num_states}"
                )
            if perm.mapping not in seen:
                seen.add(perm.mapping)
                chosen.append(perm)
        return cls(tuple(chosen))

    @classmethod
    def identity_only(cls, num_states: int) -> ActionSet:
        return cls((Permutation.identity(num_states),))

    @classmethod
    def transpositions(cls, num_states: int, include_three_cycles: bool = False) -> ActionSet:
        """Identity plus every transposition, optionally plus every 3-cycle."""
        perms = [
            Permutation.transposition(num_states, i, j)
            for i, j in itertools.combinations(range(num_states), 2)
        ]
        if include_three_cycles:
            for i, j, k in itertools.combinations(range(num_states), 3):
                for a, b, c in ((i, j, k), (i, k, j)):
                    mapping = list(range(num_states))
                    mapping[a], mapping[b], mapping[c] = b, c, a
                    perms.append(Permutation(tuple(mapping), f"cycle_{a}_{b}_{c}"))
        return cls.build(num_states, perms)

    @classmethod
    def from_named(cls, perm: Permutation) -> ActionSet:
        """Identity, ``perm`` and its inverse (``{ε, τ, τ⁻¹}``)."""
        return cls.build(perm.size, [perm, perm.inverse(f"{perm.name}_inv")])

    @classmethod
    def from_spec(cls, text: str, model: ExpandedHmm) -> ActionSet:
        """Resolve a command-line action-set description.

        Accepted values are ``identity``, ``transpositions``,
        ``transpositions+3cycles``, the name of a permutation carried by the
        model (giving identity, it and its inverse) or a path to a JSON file
        with a list of ``{"name", "perm"}`` entries.

        Raises:
            ModelValidationError: If the description cannot be resolved
        """
        size = model.num_physical
        key = text.strip()
        if key == "identity":
            return cls.identity_only(size)
        if key == "transpositions":
            return cls.transpositions(size)
        if key == "transpositions+3cycles":
            return cls.transpositions(size, include_three_cycles=True)
        if key in model.permutations:
            return cls.from_named(Permutation(model.permutations[key], key))
        path = Path(key)
        if path.suffix == ".json" and path.exists():
            with open(path) as f:
                return cls.from_json(json.load(f))
        known = ", ".join(["identity", "transpositions", "transpositions+3cycles", *model.permutations])
        raise ModelValidationError(f"unknown action set '{text}' (known: {known})")

    @classmethod
    def from_json(cls, data: Sequence[Dict[str, object]]) -> ActionSet:
        """Create an ActionSet from a list of ``{"name", "perm"}`` entries."""
        perms = [Permutation(tuple(entry["perm"]), str(entry.get("name", ""))) for entry in data]  # type: ignore[arg-type]
        if not perms:
            raise ModelValidationError("action list is empty")
        if perms[0].is_identity:
            return cls(tuple(perms))
        return cls.build(perms[0].size, perms)

    def to_json(self) -> List[Dict[str, object]]:
        return [{"name": p.name, "perm": list(p.mapping)} for p in self.actions]

    @property
    def num_states(self) -> int:
        return self.actions[0].size

    @property
    def names(self) -> List[str]:
        return [p.name for p in self.actions]

    def index(self, perm: Permutation) -> int:
        """Position of ``perm`` in the set.

        Raises:
            ModelValidationError: If the permutation is not part of the set
        """
        for i, candidate in enumerate(self.actions):
            if candidate.mapping == perm.mapping:
                return i
        raise ModelValidationError(f"permutation {perm.name} is not in the action set")

    def effective_transitions(self, model: ExpandedHmm) -> np.ndarray:
        """Stacked effective transition matrices, shape (|A|, |T|, |T|)."""
        if self.num_states != model.num_physical:
            raise ModelValidationError(
                f"actions act on {self.num_states} levels, model has {model.num_physical}"
            )
        return np.stack([model.effective_transition(p.mapping) for p in self.actions])

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, index: int) -> Permutation:
        return self.actions[index]

    def __iter__(self) -> Iterator[Permutation]:
        return iter(self.actions)
