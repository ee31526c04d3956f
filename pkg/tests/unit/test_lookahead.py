"""Tests for the minimum-entropy look-ahead tree."""

import math

import numpy as np
import pytest

from adaptivereadout.algorithms.belief import (
    BeliefState,
    bayes_update,
    branch_weights,
    initial_belief,
    posterior_entropy,
    transition_update,
)
from adaptivereadout.algorithms.lookahead import (
    advance_lookahead_tree,
    best_lookahead_action,
    build_lookahead_tree,
    lookahead_costs,
    min_entropy_action,
)
from adaptivereadout.core.errors import (
    ImpossibleObservationError,
    ModelValidationError,
    WorkCapExceededError,
)
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.models.three_state import three_state_expanded
from adaptivereadout.structs.permutation import ActionSet


def _first_belief(model: ExpandedHmm, y1: int) -> BeliefState:
    return bayes_update(initial_belief(model), y1, model)


def _one_step_costs(beta: BeliefState, model: ExpandedHmm, actions: ActionSet) -> np.ndarray:
    costs = []
    for a in range(len(actions)):
        eta = transition_update(beta, a, model, actions)
        weights = branch_weights(eta, model)
        costs.append(
            math.fsum(
                weights[y] * posterior_entropy(bayes_update(eta, y, model))
                for y in range(model.num_outputs)
                if weights[y] > 0
            )
        )
    return np.array(costs)


class TestLookaheadTree:
    """Test building, scoring and re-rooting look-ahead trees."""

    def test_depth_one_costs(self, two_state: ExpandedHmm) -> None:
        """Test one-step expected entropies against direct belief updates."""
        actions = ActionSet.from_spec("flip", two_state)
        beta = _first_belief(two_state, 0)
        tree = build_lookahead_tree(beta, 1, two_state, actions)
        assert np.allclose(lookahead_costs(tree), _one_step_costs(beta, two_state, actions))

    def test_min_entropy_action(self, two_state: ExpandedHmm) -> None:
        """Test that the chosen action has the lowest cost."""
        actions = ActionSet.from_spec("flip", two_state)
        beta = _first_belief(two_state, 1)
        costs = _one_step_costs(beta, two_state, actions)
        assert min_entropy_action(beta, 1, two_state, actions) == int(np.argmin(costs))

    def test_small_leak_first_zero(self) -> None:
        """Test that one step of look-ahead after a 0 swaps levels 1 and 2."""
        model = three_state_expanded(0.01, 0.01)
        actions = ActionSet.transpositions(3)
        action = min_entropy_action(_first_belief(model, 0), 1, model, actions)
        assert actions.names()[action] == "swap_1_2"

    def test_symmetric_actions_tie_to_identity(self, three_state: ExpandedHmm) -> None:
        """Test that an uninformative output makes mirror-image actions tie."""
        actions = ActionSet.from_spec("mirror", three_state)
        beta = _first_belief(three_state, 1)
        assert best_lookahead_action(build_lookahead_tree(beta, 2, three_state, actions)) == 0

    def test_advance_matches_rebuild(self, three_state: ExpandedHmm) -> None:
        """Test that a re-rooted and extended tree scores like a fresh one."""
        actions = ActionSet.transpositions(3)
        beta = _first_belief(three_state, 0)
        tree = build_lookahead_tree(beta, 2, three_state, actions)
        action = best_lookahead_action(tree)
        advanced = advance_lookahead_tree(tree, 2, action, three_state, actions)
        fresh_beta = bayes_update(transition_update(beta, action, three_state, actions), 2, three_state)
        fresh = build_lookahead_tree(fresh_beta, 2, three_state, actions)
        assert advanced.depth == 2
        assert np.allclose(advanced.root.joint, fresh.root.joint)
        assert np.allclose(lookahead_costs(advanced), lookahead_costs(fresh))

    def test_advance_truncates(self, three_state: ExpandedHmm) -> None:
        """Test that a shallower target depth drops the bottom layer."""
        actions = ActionSet.transpositions(3)
        beta = _first_belief(three_state, 0)
        tree = build_lookahead_tree(beta, 3, three_state, actions)
        advanced = advance_lookahead_tree(tree, 0, 1, three_state, actions, depth=1)
        fresh_beta = bayes_update(transition_update(beta, 1, three_state, actions), 0, three_state)
        fresh = build_lookahead_tree(fresh_beta, 1, three_state, actions)
        assert advanced.depth == 1
        assert np.allclose(lookahead_costs(advanced), lookahead_costs(fresh))

    def test_advance_leaves_input_untouched(self, three_state: ExpandedHmm) -> None:
        """Test that re-rooting does not modify the original tree."""
        actions = ActionSet.transpositions(3)
        tree = build_lookahead_tree(_first_belief(three_state, 0), 1, three_state, actions)
        before = lookahead_costs(tree)
        advance_lookahead_tree(tree, 2, 0, three_state, actions)
        assert tree.depth == 1
        assert np.array_equal(lookahead_costs(tree), before)

    def test_pruned_branch(self) -> None:
        """Test that a zero-probability output cannot be followed."""
        model = three_state_expanded(0.05, 0.0)
        actions = ActionSet.transpositions(3)
        tree = build_lookahead_tree(_first_belief(model, 0), 1, model, actions)
        with pytest.raises(ImpossibleObservationError):
            advance_lookahead_tree(tree, 1, 0, model, actions)

    def test_depth_checked(self, three_state: ExpandedHmm) -> None:
        """Test that the look-ahead depth must be positive."""
        with pytest.raises(ModelValidationError):
            build_lookahead_tree(_first_belief(three_state, 0), 0, three_state, ActionSet.transpositions(3))

    def test_work_cap(self, three_state: ExpandedHmm) -> None:
        """Test that oversized trees are refused."""
        with pytest.raises(WorkCapExceededError):
            build_lookahead_tree(
                _first_belief(three_state, 0), 6, three_state, ActionSet.transpositions(3), work_cap=100
            )
