"""Outcome-independent policies, including "no permutations"."""

from __future__ import annotations

import itertools
from typing import Any, Dict, Iterator, Optional, Sequence, Tuple

from adaptivereadout.algorithms.belief import BeliefState
from adaptivereadout.core.errors import ModelValidationError, PolicyError
from adaptivereadout.policies.base import Policy, PolicyCursor
from adaptivereadout.structs.permutation import ActionSet


class StaticCursor(PolicyCursor):
    def __init__(self, policy: StaticPolicy, horizon: int, history: Tuple[int, ...] = ()) -> None:
        super().__init__(horizon, history)
        self.policy = policy

    def choose(self, belief: BeliefState) -> int:
        k = len(self.history)
        if not 1 <= k < self.horizon:
            raise PolicyError(f"no action after {k} of {self.horizon} outputs")
        sequence = self.policy.sequence
        return 0 if sequence is None else sequence[k - 1]

    def advance(self, action: Optional[int], y: int) -> StaticCursor:
        return StaticCursor(self.policy, self.horizon, self.history + (y,))


class StaticPolicy(Policy):
    """Fixed action sequence applied regardless of the outputs.

    Attributes:
        sequence: Action index applied after output k (k = 1..n-1), or None
            for the all-identity "no permutations" policy of any horizon
    """

    kind = "static"

    def __init__(
        self,
        actions: ActionSet,
        sequence: Optional[Sequence[int]] = None,
        label: Optional[str] = None,
    ) -> None:
        super().__init__(actions)
        self.sequence = None if sequence is None else tuple(int(a) for a in sequence)
        if self.sequence is not None:
            bad = [a for a in self.sequence if not 0 <= a < len(actions)]
            if bad:
                raise ModelValidationError(f"action index {bad[0]} not in the action set")
        self.label = label

    @classmethod
    def no_permutations(cls, num_states: int) -> StaticPolicy:
        return cls(ActionSet.identity_only(num_states), None, "no-perms")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.sequence is None:
            return "no-perms"
        return "static:" + ",".join(self.actions[a].name for a in self.sequence)

    def start(self, n: int) -> StaticCursor:
        if self.sequence is not None and len(self.sequence) < n - 1:
            raise PolicyError(
                f"static sequence has {len(self.sequence)} actions, horizon {n} needs {n - 1}"
            )
        return StaticCursor(self, n)

    def to_json(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "name": self.name,
            "actions": self.actions.to_json(),
            "sequence": None if self.sequence is None else list(self.sequence),
        }


def all_static_policies(actions: ActionSet, n: int) -> Iterator[StaticPolicy]:
    """Every outcome-independent action sequence of length n-1."""
    for sequence in itertools.product(range(len(actions)), repeat=max(n - 1, 0)):
        yield StaticPolicy(actions, sequence)
