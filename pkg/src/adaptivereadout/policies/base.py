"""Policy protocol shared by static, lookup-table and look-ahead policies.

A policy is walked through cursors: ``policy.start(n)`` returns a cursor at
the empty history, ``cursor.advance(action, y)`` moves to the child history
(``action`` is None before the first output) and ``cursor.choose(belief)``
returns the action index to apply after the outputs seen so far. Exact
evaluation and simulation only ever talk to policies this way, so the
evaluated policy is exactly the deployable one.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple

from adaptivereadout.algorithms.belief import BeliefState
from adaptivereadout.structs.permutation import ActionSet


class PolicyCursor(ABC):
    """Position of a policy along one output history."""

    def __init__(self, horizon: int, history: Tuple[int, ...] = ()) -> None:
        self.horizon = horizon
        self.history = history

    @abstractmethod
    def choose(self, belief: BeliefState) -> int:
        """Action index to apply after ``self.history``.

        Args:
            belief: Post-observation belief for ``self.history``

        Raises:
            PolicyError: If the policy has no action for this history
        """

    @abstractmethod
    def advance(self, action: Optional[int], y: int) -> PolicyCursor:
        """Cursor for the history extended by output ``y``."""


class Policy(ABC):
    """Rule mapping output histories to permutation actions.

    Attributes:
        actions: Action set the emitted indices refer to
    """

    kind: str = "policy"

    def __init__(self, actions: ActionSet) -> None:
        self.actions = actions

    @property
    def name(self) -> str:
        return self.kind

    @abstractmethod
    def start(self, n: int) -> PolicyCursor:
        """Cursor at the empty history for a horizon of ``n`` outputs."""

    @abstractmethod
    def to_json(self) -> Dict[str, Any]:
        """JSON-serializable description."""
