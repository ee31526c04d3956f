"""Minimum-posterior-entropy look-ahead over a materialized belief tree.

The tree below a post-observation belief alternates action branches and
observation children for ``depth`` layers. Its value is the depth-limited
analogue of the Bellman recursion with the posterior entropy of the
initial level as terminal cost, minimized over actions. After acting and
observing, the tree is re-rooted at the matching child and extended by one
layer instead of being rebuilt.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from adaptivereadout.algorithms.belief import BeliefState, marginal_entropy
from adaptivereadout.algorithms.bellman import best_index
from adaptivereadout.core.common import DEFAULT_NODE_CAP, check_work
from adaptivereadout.core.errors import ImpossibleObservationError, ModelValidationError
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.structs.permutation import ActionSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ActionBranch:
    """Outcome of one action: predictive output weights and reachable children."""

    weights: np.ndarray
    children: Dict[int, LookaheadNode]


@dataclass(frozen=True, eq=False)
class LookaheadNode:
    """Post-observation belief; ``branches`` is None at the leaves."""

    joint: np.ndarray
    branches: Optional[Tuple[ActionBranch, ...]] = None


@dataclass(frozen=True, eq=False)
class LookaheadTree:
    root: LookaheadNode
    depth: int


def _expand(joint: np.ndarray, layers: int, effs: np.ndarray, out: np.ndarray) -> LookaheadNode:
    if layers == 0:
        return LookaheadNode(joint)
    branches = []
    for eff in effs:
        eta = joint @ eff.T
        weights = out @ eta.sum(axis=0)
        children = {
            int(y): _expand(eta * out[y][None, :] / weights[y], layers - 1, effs, out)
            for y in np.flatnonzero(weights > 0)
        }
        branches.append(ActionBranch(weights, children))
    return LookaheadNode(joint, tuple(branches))


def _extend(node: LookaheadNode, layers: int, effs: np.ndarray, out: np.ndarray) -> LookaheadNode:
    if node.branches is None:
        return _expand(node.joint, layers, effs, out)
    return LookaheadNode(
        node.joint,
        tuple(
            ActionBranch(
                branch.weights,
                {y: _extend(child, layers, effs, out) for y, child in branch.children.items()},
            )
            for branch in node.branches
        ),
    )


def _truncate(node: LookaheadNode, layers: int) -> LookaheadNode:
    if layers == 0 or node.branches is None:
        return LookaheadNode(node.joint)
    return LookaheadNode(
        node.joint,
        tuple(
            ActionBranch(
                branch.weights,
                {y: _truncate(child, layers - 1) for y, child in branch.children.items()},
            )
            for branch in node.branches
        ),
    )


def build_lookahead_tree(
    beta: BeliefState,
    depth: int,
    model: ExpandedHmm,
    actions: ActionSet,
    work_cap: float = DEFAULT_NODE_CAP,
) -> LookaheadTree:
    """Materialize every belief reachable within ``depth`` action/output layers.

    Raises:
        WorkCapExceededError: If ``(|A| * |Y|)^depth`` exceeds ``work_cap``
    """
    if depth < 1:
        raise ModelValidationError(f"look-ahead depth must be >= 1, got {depth}")
    check_work("look-ahead tree", float(len(actions) * model.num_outputs) ** depth, work_cap)
    effs = actions.effective_transitions(model)
    return LookaheadTree(_expand(beta.joint, depth, effs, np.asarray(model.out)), depth)


def _node_cost(node: LookaheadNode) -> float:
    if node.branches is None:
        return marginal_entropy(node.joint)
    costs = _branch_costs(node)
    return float(costs[best_index(costs, maximize=False)])


def _branch_costs(node: LookaheadNode) -> np.ndarray:
    assert node.branches is not None
    return np.array(
        [
            math.fsum(branch.weights[y] * _node_cost(child) for y, child in branch.children.items())
            for branch in node.branches
        ]
    )


def lookahead_costs(tree: LookaheadTree) -> np.ndarray:
    """Expected terminal entropy of the best plan starting with each action."""
    return _branch_costs(tree.root)


def best_lookahead_action(tree: LookaheadTree) -> int:
    """First action of the minimizing plan; ties go to the lowest index."""
    return best_index(lookahead_costs(tree), maximize=False)


def min_entropy_action(
    beta: BeliefState,
    g: int,
    model: ExpandedHmm,
    actions: ActionSet,
    work_cap: float = DEFAULT_NODE_CAP,
) -> int:
    """Action minimizing the expected posterior entropy ``g`` outputs ahead."""
    return best_lookahead_action(build_lookahead_tree(beta, g, model, actions, work_cap))


def advance_lookahead_tree(
    tree: LookaheadTree,
    y_observed: int,
    action_taken: int,
    model: ExpandedHmm,
    actions: ActionSet,
    depth: Optional[int] = None,
) -> LookaheadTree:
    """Re-root the tree after acting and observing, then refill it to ``depth``.

    The input tree is left untouched; shared beliefs are reused and only the
    new bottom layer is computed.

    Args:
        tree: Tree rooted at the belief where ``action_taken`` was chosen
        y_observed: Output seen after the action
        action_taken: Index of the applied action
        model: Expanded model
        actions: Action set the tree was built with
        depth: Depth of the returned tree, defaults to ``tree.depth``

    Raises:
        ImpossibleObservationError: If the observed branch was pruned as
            having zero probability
    """
    if tree.root.branches is None:
        raise ModelValidationError("cannot advance a tree of depth 0")
    if not 0 <= action_taken < len(tree.root.branches):
        raise ModelValidationError(f"action {action_taken} not in the tree")
    child = tree.root.branches[action_taken].children.get(y_observed)
    if child is None:
        raise ImpossibleObservationError(
            f"output {y_observed} after action {action_taken} was pruned from the look-ahead tree"
        )
    target = tree.depth if depth is None else depth
    if target < 1:
        raise ModelValidationError(f"look-ahead depth must be >= 1, got {target}")
    remaining = tree.depth - 1
    if target > remaining:
        effs = actions.effective_transitions(model)
        node = _extend(child, target - remaining, effs, np.asarray(model.out))
    else:
        node = _truncate(child, target)
    return LookaheadTree(node, target)
