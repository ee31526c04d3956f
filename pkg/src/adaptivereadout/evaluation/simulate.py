"""Monte Carlo estimate of the infidelity by sampling readout trajectories.

Initial states, transitions and outputs are drawn from blocks of uniforms
produced by a Philox generator, so a seed fixes every trajectory. Policy
decisions and final estimates are deterministic functions of the output
prefix and are cached in a trie keyed by the prefix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from adaptivereadout.algorithms.belief import belief_from_likelihoods
from adaptivereadout.algorithms.forward import (
    LikelihoodTable,
    forward_init,
    forward_step,
    map_estimate,
)
from adaptivereadout.core.errors import ModelValidationError
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.evaluation.report import EvalMethod, EvalReport
from adaptivereadout.policies.base import Policy, PolicyCursor
from adaptivereadout.utils.random import Random

logger = logging.getLogger(__name__)

DEFAULT_BLOCK = 4096
DEFAULT_CACHE_LIMIT = 200_000


@dataclass(eq=False)
class _PrefixNode:
    table: LikelihoodTable
    cursor: PolicyCursor
    action: Optional[int] = None
    estimate: Optional[int] = None
    children: Dict[int, _PrefixNode] = field(default_factory=dict)


class _PrefixCache:
    """Trie of visited prefixes with their decision or estimate."""

    def __init__(self, model: ExpandedHmm, policy: Policy, n: int, limit: int) -> None:
        self.model = model
        self.policy = policy
        self.n = n
        self.limit = limit
        self.effs = policy.actions.effective_transitions(model)
        support = model.initial_support
        self.row_prior = np.asarray(model.physical_prior)[list(support)]
        self.roots: Dict[int, _PrefixNode] = {}
        self.size = 0

    def _settle(self, table: LikelihoodTable, cursor: PolicyCursor) -> _PrefixNode:
        self.size += 1
        node = _PrefixNode(table, cursor)
        if table.step == self.n:
            node.estimate = map_estimate(table, self.model.physical_prior)[0]
        else:
            belief = belief_from_likelihoods(table.values, table.log_scale, self.row_prior, table.step)
            node.action = cursor.choose(belief)
        return node

    def first(self, y1: int) -> _PrefixNode:
        if self.size > self.limit:
            logger.debug("prefix cache reached %d nodes, clearing", self.size)
            self.roots.clear()
            self.size = 0
        node = self.roots.get(y1)
        if node is None:
            table = forward_init(self.model, y1)
            node = self._settle(table, self.policy.start(self.n).advance(None, y1))
            self.roots[y1] = node
        return node

    def child(self, node: _PrefixNode, y: int) -> _PrefixNode:
        nxt = node.children.get(y)
        if nxt is None:
            assert node.action is not None
            table = forward_step(self.model, node.table, y, self.effs[node.action], check=False)
            nxt = self._settle(table, node.cursor.advance(node.action, y))
            node.children[y] = nxt
        return nxt


def simulate(
    model: ExpandedHmm,
    policy: Policy,
    n: int,
    trials: int,
    seed: Optional[int] = None,
    block_size: int = DEFAULT_BLOCK,
    cache_limit: int = DEFAULT_CACHE_LIMIT,
) -> EvalReport:
    """Empirical infidelity over sampled trajectories.

    Args:
        model: Expanded model
        policy: Policy applied online
        n: Number of outputs per trajectory
        trials: Number of trajectories
        seed: RNG seed; the same seed gives an identical report
        block_size: Trajectories per block of pre-drawn uniforms
        cache_limit: Prefix-trie size at which the cache is dropped

    Returns:
        EvalReport with the empirical infidelity and its binomial standard error
    """
    if trials < 1:
        raise ModelValidationError(f"trials must be >= 1, got {trials}")
    if n < 1:
        raise ModelValidationError(f"horizon must be >= 1, got {n}")
    rng = Random(seed)
    cache = _PrefixCache(model, policy, n, cache_limit)
    cum_prior = np.cumsum(model.prior)
    cum_out = np.cumsum(model.out, axis=0)
    cum_effs = np.cumsum(cache.effs, axis=1)
    alpha = model.alpha

    support = model.initial_support
    visits = np.zeros(model.num_physical, dtype=np.int64)
    mistakes = np.zeros(model.num_physical, dtype=np.int64)
    done = 0
    while done < trials:
        rows = min(block_size, trials - done)
        block = rng.uniform_block(rows, 2 * n)
        for u in block:
            t = Random.categorical(cum_prior, u[0])
            initial = int(alpha[t])
            node = cache.first(Random.categorical(cum_out[:, t], u[1]))
            for k in range(1, n):
                t = Random.categorical(cum_effs[node.action][:, t], u[2 * k])
                node = cache.child(node, Random.categorical(cum_out[:, t], u[2 * k + 1]))
            visits[initial] += 1
            if node.estimate != initial:
                mistakes[initial] += 1
        done += rows

    infidelity = float(mistakes.sum()) / trials
    per_state = tuple(
        float(mistakes[s]) / float(visits[s]) if visits[s] else 0.0 for s in support
    )
    logger.debug("simulated %d trials of %s: %d mistakes", trials, policy.name, mistakes.sum())
    return EvalReport(
        method=EvalMethod.MONTE_CARLO,
        n=n,
        infidelity=infidelity,
        fidelity=1.0 - infidelity,
        support=support,
        per_state_error=per_state,
        trials=trials,
        stderr=math.sqrt(infidelity * (1.0 - infidelity) / trials),
        seed=rng.seed,
        policy=policy.name,
    )
