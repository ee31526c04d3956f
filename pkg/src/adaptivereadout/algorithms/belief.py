"""Belief states over (initial level, current expanded state) and their updates."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.stats import entropy

from adaptivereadout.core.errors import ImpossibleObservationError, ModelValidationError
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.structs.permutation import ActionSet, Permutation

logger = logging.getLogger(__name__)


class BeliefPhase(str, Enum):
    """Where in the observe/act cycle a belief sits."""
    POST_OBSERVATION = "post-observation"
    POST_TRANSITION = "post-transition"


@dataclass(frozen=True, eq=False)
class BeliefState:
    """Joint posterior over (initial level, current expanded state).

    Attributes:
        joint: Array of shape (|L|, |T|) summing to 1
        phase: Post-observation (beta) or post-transition (eta)
        step: Number of outputs observed so far
    """

    joint: np.ndarray
    phase: BeliefPhase
    step: int

    @property
    def marginal(self) -> np.ndarray:
        """Posterior over the initial level (rows of ``joint``)."""
        return self.joint.sum(axis=1)

    @property
    def total(self) -> float:
        return float(self.joint.sum())


def initial_belief(model: ExpandedHmm) -> BeliefState:
    """``eta_0(s1, t) = prior(t) * [alpha(t) = s1]`` before any output."""
    support = model.initial_support
    joint = np.zeros((len(support), model.num_states))
    for row, s1 in enumerate(support):
        mask = model.alpha == s1
        joint[row, mask] = model.prior[mask]
    return BeliefState(joint / joint.sum(), BeliefPhase.POST_TRANSITION, 0)


def bayes_update(eta: BeliefState, y: int, model: ExpandedHmm) -> BeliefState:
    """Condition a post-transition belief on output ``y``.

    Raises:
        ImpossibleObservationError: If ``y`` has zero probability under ``eta``
    """
    if eta.phase is not BeliefPhase.POST_TRANSITION:
        raise ModelValidationError("bayes_update expects a post-transition belief")
    if not 0 <= y < model.num_outputs:
        raise ModelValidationError(f"output {y} out of range 0..{model.num_outputs - 1}")
    weighted = eta.joint * model.out[y][None, :]
    norm = weighted.sum()
    if norm <= 0:
        raise ImpossibleObservationError(f"output {y} has zero probability at step {eta.step + 1}")
    return BeliefState(weighted / norm, BeliefPhase.POST_OBSERVATION, eta.step + 1)


def transition_update(
    beta: BeliefState,
    action: Union[int, Permutation],
    model: ExpandedHmm,
    actions: Optional[ActionSet] = None,
) -> BeliefState:
    """Apply a permutation followed by one transition of the model.

    ``eta(s1, t') = sum_t beta(s1, t) * A(t' | induced(t))``

    Args:
        beta: Post-observation belief
        action: Action index into ``actions`` or a permutation
        model: Expanded model
        actions: Action set the action must belong to

    Raises:
        ModelValidationError: If the action is not part of ``actions``
    """
    if beta.phase is not BeliefPhase.POST_OBSERVATION:
        raise ModelValidationError("transition_update expects a post-observation belief")
    if isinstance(action, Permutation):
        perm = action
        if actions is not None:
            actions.index(perm)
    else:
        if actions is None:
            raise ModelValidationError("an action index needs an action set")
        if not 0 <= action < len(actions):
            raise ModelValidationError(f"action {action} not in the action set")
        perm = actions[action]
    eff = model.effective_transition(perm.mapping)
    joint = beta.joint @ eff.T
    return BeliefState(joint / joint.sum(), BeliefPhase.POST_TRANSITION, beta.step)


def leaf_value(beta: BeliefState) -> float:
    """Probability of correct inference, ``max_s1 sum_t beta(s1, t)``."""
    return float(beta.marginal.max())


def branch_weight(eta: BeliefState, y: int, model: ExpandedHmm) -> float:
    """Predictive probability of output ``y`` given a post-transition belief."""
    return float(model.out[y] @ eta.joint.sum(axis=0))


def branch_weights(eta: BeliefState, model: ExpandedHmm) -> np.ndarray:
    """Predictive distribution over every output."""
    return model.out @ eta.joint.sum(axis=0)


def posterior_entropy(beta: BeliefState) -> float:
    """Shannon entropy (nats) of the initial-level marginal."""
    return float(entropy(beta.marginal))


def marginal_entropy(joint: np.ndarray) -> float:
    """Entropy (nats) of the row sums of a joint belief array."""
    return float(entropy(joint.sum(axis=1)))


def belief_from_likelihoods(
    values: np.ndarray, log_scale: np.ndarray, row_prior: np.ndarray, step: int
) -> BeliefState:
    """Post-observation belief from a scaled likelihood table.

    Args:
        values: Scaled table values, shape (|L|, |T|)
        log_scale: Row scale exponents
        row_prior: Prior of each support row
        step: Outputs absorbed
    """
    live = values.sum(axis=1) > 0
    if not np.any(live):
        raise ImpossibleObservationError(f"output prefix of length {step} has zero probability")
    offset = log_scale[live].max()
    factors = np.where(live, np.exp(np.where(live, log_scale - offset, 0.0)), 0.0) * row_prior
    joint = values * factors[:, None]
    return BeliefState(joint / joint.sum(), BeliefPhase.POST_OBSERVATION, step)
