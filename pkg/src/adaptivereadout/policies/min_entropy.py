"""Receding-horizon policy minimizing the expected posterior entropy."""

from __future__ import annotations

import logging
from typing import Any, Dict, Optional, Tuple

from adaptivereadout.algorithms.belief import BeliefState
from adaptivereadout.algorithms.lookahead import (
    LookaheadTree,
    advance_lookahead_tree,
    best_lookahead_action,
    build_lookahead_tree,
)
from adaptivereadout.core.common import DEFAULT_NODE_CAP
from adaptivereadout.core.errors import ImpossibleObservationError, ModelValidationError, PolicyError
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.policies.base import Policy, PolicyCursor
from adaptivereadout.structs.permutation import ActionSet

logger = logging.getLogger(__name__)


class MinEntropyCursor(PolicyCursor):
    """Cursor carrying the look-ahead tree built at its history, once chosen."""

    def __init__(
        self,
        policy: MinEntropyPolicy,
        horizon: int,
        history: Tuple[int, ...] = (),
        tree: Optional[LookaheadTree] = None,
    ) -> None:
        super().__init__(horizon, history)
        self.policy = policy
        self.tree = tree

    def _depth(self, k: int) -> int:
        return min(self.policy.lookahead, self.horizon - k)

    def choose(self, belief: BeliefState) -> int:
        k = len(self.history)
        depth = self._depth(k)
        if k < 1 or depth < 1:
            raise PolicyError(f"no action after {k} of {self.horizon} outputs")
        if self.tree is None or self.tree.depth != depth:
            self.tree = build_lookahead_tree(
                belief, depth, self.policy.model, self.actions, self.policy.work_cap
            )
        return best_lookahead_action(self.tree)

    @property
    def actions(self) -> ActionSet:
        return self.policy.actions

    def advance(self, action: Optional[int], y: int) -> MinEntropyCursor:
        history = self.history + (y,)
        depth = self._depth(len(history))
        tree = None
        if self.tree is not None and action is not None and depth >= 1:
            try:
                tree = advance_lookahead_tree(
                    self.tree, y, action, self.policy.model, self.actions, depth
                )
            except ImpossibleObservationError:
                logger.warning("output %d pruned from look-ahead tree, rebuilding", y)
        return MinEntropyCursor(self.policy, self.horizon, history, tree)


class MinEntropyPolicy(Policy):
    """Pick the first action of the plan minimizing entropy ``lookahead`` outputs ahead.

    Near the horizon the look-ahead is truncated to the outputs that remain.

    Attributes:
        model: Model the beliefs are propagated with
        lookahead: Look-ahead depth g
        work_cap: Cap on the size of each look-ahead tree
    """

    kind = "min-entropy"

    def __init__(
        self,
        model: ExpandedHmm,
        actions: ActionSet,
        lookahead: int = 2,
        work_cap: float = DEFAULT_NODE_CAP,
    ) -> None:
        super().__init__(actions)
        if lookahead < 1:
            raise ModelValidationError(f"look-ahead must be >= 1, got {lookahead}")
        self.model = model
        self.lookahead = lookahead
        self.work_cap = work_cap

    @property
    def name(self) -> str:
        return f"min-entropy(g={self.lookahead})"

    def start(self, n: int) -> MinEntropyCursor:
        return MinEntropyCursor(self, n)

    def to_json(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "name": self.name,
            "lookahead": self.lookahead,
            "actions": self.actions.to_json(),
        }
