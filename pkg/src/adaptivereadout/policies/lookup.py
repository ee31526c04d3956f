"""Precomputed adaptive policies stored as look-up tables."""

from __future__ import annotations

from typing import Any, Dict, Optional, Tuple

from adaptivereadout.algorithms.belief import BeliefState
from adaptivereadout.algorithms.forward import (
    LikelihoodTable,
    forward_init,
    forward_step,
    map_estimate,
)
from adaptivereadout.core.errors import ModelValidationError, PolicyError
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.policies.base import Policy, PolicyCursor
from adaptivereadout.structs.permutation import ActionSet

Prefix = Tuple[int, ...]


def prefix_key(prefix: Prefix) -> str:
    """Serialized table key, e.g. ``(0, 3, 1) -> "0,3,1"``."""
    return ",".join(str(y) for y in prefix)


def parse_prefix_key(key: str) -> Prefix:
    return tuple(int(part) for part in key.split(",")) if key else ()


class LookupCursor(PolicyCursor):
    def __init__(self, policy: LookupPolicy, horizon: int, history: Prefix = ()) -> None:
        super().__init__(horizon, history)
        self.policy = policy

    def choose(self, belief: BeliefState) -> int:
        return self.policy.action_for(self.history)

    def advance(self, action: Optional[int], y: int) -> LookupCursor:
        return LookupCursor(self.policy, self.horizon, self.history + (y,))


class LookupPolicy(Policy):
    """Adaptive policy as a table from output prefixes to action indices.

    Attributes:
        n: Horizon the table was solved for
        table: Action index per reachable prefix of length 1..n-1
        fidelity: Fidelity reported by the solver, if known
        decisions: Estimated initial level per reachable full sequence, if added
    """

    kind = "lookup"

    def __init__(
        self,
        n: int,
        actions: ActionSet,
        table: Dict[Prefix, int],
        fidelity: Optional[float] = None,
        decisions: Optional[Dict[Prefix, int]] = None,
        label: str = "exhaustive",
    ) -> None:
        super().__init__(actions)
        if n < 1:
            raise ModelValidationError(f"horizon must be >= 1, got {n}")
        self.n = n
        self.table = dict(table)
        self.fidelity = fidelity
        self.decisions = decisions
        self.label = label
        for prefix, action in self.table.items():
            if not 1 <= len(prefix) < n:
                raise ModelValidationError(f"prefix {prefix_key(prefix)} outside steps 1..{n - 1}")
            if not 0 <= action < len(actions):
                raise ModelValidationError(f"prefix {prefix_key(prefix)}: unknown action {action}")

    @property
    def name(self) -> str:
        return self.label

    def action_for(self, prefix: Prefix) -> int:
        try:
            return self.table[prefix]
        except KeyError:
            raise PolicyError(f"lookup table has no entry for prefix '{prefix_key(prefix)}'") from None

    def start(self, n: int) -> LookupCursor:
        if n != self.n:
            raise PolicyError(f"lookup policy solved for n={self.n}, asked for n={n}")
        return LookupCursor(self, n)

    def with_decisions(self, model: ExpandedHmm) -> LookupPolicy:
        """Copy with the MAP decision for every reachable full output sequence."""
        effs = self.actions.effective_transitions(model)
        decisions: Dict[Prefix, int] = {}

        def walk(table: LikelihoodTable, prefix: Prefix) -> None:
            if len(prefix) == self.n:
                decisions[prefix] = map_estimate(table, model.physical_prior)[0]
                return
            eff = effs[self.action_for(prefix)]
            for y in range(model.num_outputs):
                child = forward_step(model, table, y, eff, check=False)
                if not child.is_zero:
                    walk(child, prefix + (y,))

        for y1 in range(model.num_outputs):
            first = forward_init(model, y1)
            if not first.is_zero:
                walk(first, (y1,))
        return LookupPolicy(self.n, self.actions, self.table, self.fidelity, decisions, self.label)

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> LookupPolicy:
        """Create a LookupPolicy from its JSON form.

        Raises:
            ModelValidationError: If the document is not a lookup policy
        """
        if data.get("kind", "lookup") != "lookup":
            raise ModelValidationError(f"expected a lookup policy, got kind '{data.get('kind')}'")
        try:
            actions = ActionSet.from_json(data["actions"])
            table = {parse_prefix_key(k): int(v) for k, v in data["table"].items()}
            decisions = data.get("decisions")
            return cls(
                n=int(data["n"]),
                actions=actions,
                table=table,
                fidelity=data.get("fidelity"),
                decisions=None
                if decisions is None
                else {parse_prefix_key(k): int(v) for k, v in decisions.items()},
                label=str(data.get("name", "exhaustive")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelValidationError(f"invalid lookup policy document: {e}") from e

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "kind": self.kind,
            "name": self.label,
            "n": self.n,
            "actions": self.actions.to_json(),
            "table": {prefix_key(p): a for p, a in sorted(self.table.items())},
            "fidelity": self.fidelity,
        }
        if self.decisions is not None:
            data["decisions"] = {prefix_key(p): s for p, s in sorted(self.decisions.items())}
        return data
