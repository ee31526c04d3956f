"""Reduction of the adaptive readout problem to a finite-horizon POMDP.

POMDP states are triples ``(t, l, k)``: the current expanded state ``t``,
the initial level ``l`` (kept for the reward) and a step counter ``k`` in
``0..n``. Layer 0 exists because the first output is seen before any action
while the POMDP only emits observations after a transition: every action
moves ``(t, l, 0)`` to ``(t, l, 1)`` unchanged, which emits ``y_1``. From
layer ``k`` (1 <= k < n) a permutation action moves to layer ``k + 1``
through the permuted model transition. Layer ``n`` is absorbing. Taking
``decide_l`` in layer ``n`` pays 1 when ``l`` is the remembered initial
level; decision actions taken earlier act as the identity and pay nothing.
With ``n + 1`` decision epochs the expected total reward is the fidelity.

Matrices follow the POMDP file convention, rows indexed by the source:
``trans[a, s, s']``, ``obs[a, s', o]`` and ``reward[a, s]``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from adaptivereadout.core.common import DEFAULT_POMDP_STATE_CAP, check_work
from adaptivereadout.core.errors import ModelValidationError, PolicyError
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.policies.lookup import LookupPolicy, Prefix
from adaptivereadout.structs.permutation import ActionSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PomdpModel:
    """Finite POMDP with undiscounted rewards.

    Attributes:
        states: State names
        actions: Action names
        observations: Observation names
        trans: ``trans[a, s, s'] = P(s' | s, a)``
        obs: ``obs[a, s', o] = P(o | s', a)``
        reward: ``reward[a, s]`` for taking ``a`` in ``s``
        start: Initial state distribution
        horizon: Readout length n the model encodes (0 if unknown)
        num_permutations: Leading actions that are permutations
    """

    states: Tuple[str, ...]
    actions: Tuple[str, ...]
    observations: Tuple[str, ...]
    trans: np.ndarray
    obs: np.ndarray
    reward: np.ndarray
    start: np.ndarray
    horizon: int = 0
    num_permutations: int = 0
    discount: float = 1.0

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def epochs(self) -> int:
        """Decision epochs needed to collect the terminal reward."""
        return self.horizon + 1


def state_name(t: int, l: int, k: int) -> str:
    return f"s{t}_l{l}_k{k}"


def to_pomdp(
    model: ExpandedHmm,
    actions: ActionSet,
    n: int,
    state_cap: float = DEFAULT_POMDP_STATE_CAP,
) -> PomdpModel:
    """Build the POMDP whose optimal expected reward is the optimal fidelity.

    The state space has ``|T| * |L| * (n + 1)`` states rather than
    ``|S| * |L| * n``: ``T`` holds the expanded states (``|S| * Y`` for
    models with output memory), and the extra layer ``k = 0`` carries the
    first output, which is seen before any action.

    Args:
        model: Expanded model
        actions: Permutations available between steps
        n: Number of outputs
        state_cap: Cap on the number of POMDP states

    Raises:
        WorkCapExceededError: If ``|T| * |L| * (n + 1)`` exceeds ``state_cap``
    """
    if n < 1:
        raise ModelValidationError(f"horizon must be >= 1, got {n}")
    support = model.initial_support
    t_count, l_count = model.num_states, len(support)
    size = t_count * l_count * (n + 1)
    check_work("POMDP states", size, state_cap)

    def index(t: int, li: int, k: int) -> int:
        return (k * l_count + li) * t_count + t

    states = tuple(
        state_name(t, support[li], k)
        for k in range(n + 1)
        for li in range(l_count)
        for t in range(t_count)
    )
    names = tuple(f"perm_{p.name}" for p in actions) + tuple(f"decide_{l}" for l in support)
    a_count = len(names)

    effs = actions.effective_transitions(model)
    identity_eff = np.asarray(model.trans)
    trans = np.zeros((a_count, size, size))
    for a in range(a_count):
        eff = effs[a] if a < len(actions) else identity_eff
        for li in range(l_count):
            for t in range(t_count):
                trans[a, index(t, li, 0), index(t, li, 1)] = 1.0
                trans[a, index(t, li, n), index(t, li, n)] = 1.0
            for k in range(1, n):
                rows = [index(t, li, k) for t in range(t_count)]
                cols = [index(t, li, k + 1) for t in range(t_count)]
                # row t (source), column t' (destination) = A(t' | induced(t))
                trans[a][np.ix_(rows, cols)] = eff.T

    layer_out = np.asarray(model.out).T  # (T, Y)
    obs = np.tile(layer_out, (l_count * (n + 1), 1))
    obs = np.broadcast_to(obs, (a_count, size, model.num_outputs)).copy()

    reward = np.zeros((a_count, size))
    for li in range(l_count):
        decide = len(actions) + li
        for t in range(t_count):
            reward[decide, index(t, li, n)] = 1.0

    start = np.zeros(size)
    for li, l in enumerate(support):
        mask = model.alpha == l
        for t in np.flatnonzero(mask):
            start[index(int(t), li, 0)] = model.prior[t]

    output_names = tuple(f"y{y}" for y in range(model.num_outputs))
    logger.info("POMDP: %d states, %d actions, %d observations", size, a_count, len(output_names))
    return PomdpModel(
        states=states,
        actions=names,
        observations=output_names,
        trans=trans,
        obs=obs,
        reward=reward,
        start=start,
        horizon=n,
        num_permutations=len(actions),
    )


def _posterior_branches(
    pomdp: PomdpModel, belief: np.ndarray, action: int
) -> List[Tuple[int, float, np.ndarray]]:
    predicted = belief @ pomdp.trans[action]
    branches = []
    for o in range(len(pomdp.observations)):
        joint = predicted * pomdp.obs[action][:, o]
        weight = float(joint.sum())
        if weight > 0:
            branches.append((o, weight, joint / weight))
    return branches


def pomdp_optimal_value(pomdp: PomdpModel, epochs: int) -> float:
    """Optimal expected total reward over ``epochs`` decisions.

    Exhaustive search over the belief tree; only suitable for small models.
    """

    def value(belief: np.ndarray, remaining: int) -> float:
        if remaining == 0:
            return 0.0
        best = -math.inf
        for a in range(len(pomdp.actions)):
            total = float(belief @ pomdp.reward[a])
            if remaining > 1:
                total += math.fsum(
                    weight * value(child, remaining - 1)
                    for _, weight, child in _posterior_branches(pomdp, belief, a)
                )
            best = max(best, total)
        return best

    return value(np.asarray(pomdp.start, dtype=float), epochs)


def evaluate_policy_on_pomdp(pomdp: PomdpModel, policy: LookupPolicy) -> float:
    """Expected total reward of a look-up policy with its terminal decisions.

    The first epoch applies the identity; epochs 2..n apply the policy's
    permutation for the prefix observed so far; the last epoch takes the
    policy's decision for the full sequence.

    Raises:
        PolicyError: On a horizon mismatch or a policy without decisions
    """
    if pomdp.horizon != policy.n:
        raise PolicyError(f"POMDP encodes n={pomdp.horizon}, policy was solved for n={policy.n}")
    if policy.decisions is None:
        raise PolicyError("policy has no terminal decisions; call with_decisions first")
    decide_offset = pomdp.num_permutations
    decide_names = pomdp.actions[decide_offset:]
    decide_index = {int(name.split("_", 1)[1]): decide_offset + i for i, name in enumerate(decide_names)}

    def walk(belief: np.ndarray, prefix: Prefix) -> float:
        # belief is unnormalized: total mass is the prefix probability
        if len(prefix) == policy.n:
            decision = decide_index[policy.decisions[prefix]]  # type: ignore[index]
            return float(belief @ pomdp.reward[decision])
        action = 0 if not prefix else policy.action_for(prefix)
        predicted = belief @ pomdp.trans[action]
        parts = []
        for o in range(len(pomdp.observations)):
            joint = predicted * pomdp.obs[action][:, o]
            if joint.sum() > 0:
                parts.append(walk(joint, prefix + (o,)))
        return math.fsum(parts)

    return walk(np.asarray(pomdp.start, dtype=float), ())
