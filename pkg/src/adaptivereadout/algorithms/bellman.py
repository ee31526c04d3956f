"""Exhaustive Bellman-optimal permutation policy.

The alternating observation/action tree is traversed depth first. At an
action node the value is the best child over actions; at an observation node
it is the expectation over outputs weighted by their predictive probability.
Only reachable prefixes are visited and only the chosen action's subtree
entries end up in the look-up table.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from adaptivereadout.algorithms.belief import initial_belief
from adaptivereadout.core.common import (
    DEFAULT_NODE_CAP,
    TIE_TOL,
    CountingProgressCallback,
    check_work,
)
from adaptivereadout.core.errors import ModelValidationError
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.policies.lookup import LookupPolicy, Prefix
from adaptivereadout.structs.permutation import ActionSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class _Problem:
    effs: np.ndarray  # (A, T, T)
    out: np.ndarray  # (Y, T)
    final: np.ndarray  # (A, Y, T): out @ eff for the last action layer
    n: int


def best_index(values: np.ndarray, maximize: bool = True) -> int:
    """Index of the best value; ties within TIE_TOL go to the lowest index."""
    best = 0
    for i in range(1, len(values)):
        gain = values[i] - values[best] if maximize else values[best] - values[i]
        if gain > TIE_TOL:
            best = i
    return best


def _observation_value(
    problem: _Problem, beta: np.ndarray, k: int, prefix: Prefix
) -> Tuple[float, Dict[Prefix, int]]:
    if k == problem.n:
        return float(beta.sum(axis=1).max()), {}
    if k == problem.n - 1:
        # scores[a, l, y] = P(s1 = l, y_n = y | prefix, a)
        scores = np.einsum("lt,ayt->aly", beta, problem.final)
        values = scores.max(axis=1).sum(axis=1)
        best = best_index(values)
        return float(values[best]), {prefix: best}

    values = np.empty(len(problem.effs))
    tables: List[Dict[Prefix, int]] = []
    for a, eff in enumerate(problem.effs):
        eta = beta @ eff.T
        weights = problem.out @ eta.sum(axis=0)
        parts = []
        table: Dict[Prefix, int] = {}
        for y in np.flatnonzero(weights > 0):
            child = eta * problem.out[y][None, :] / weights[y]
            value, sub = _observation_value(problem, child, k + 1, prefix + (int(y),))
            parts.append(weights[y] * value)
            table.update(sub)
        values[a] = math.fsum(parts)
        tables.append(table)
    best = best_index(values)
    chosen = tables[best]
    chosen[prefix] = best
    return float(values[best]), chosen


def _solve_branch(
    problem: _Problem, beta: np.ndarray, y1: int
) -> Tuple[float, Dict[Prefix, int]]:
    return _observation_value(problem, beta, 1, (y1,))


def solve_optimal(
    model: ExpandedHmm,
    actions: ActionSet,
    n: int,
    work_cap: float = DEFAULT_NODE_CAP,
    workers: int = 1,
    progress_callback: Optional[CountingProgressCallback] = None,
) -> Tuple[LookupPolicy, float]:
    """Solve the Bellman equation for the optimal adaptive policy.

    Args:
        model: Expanded model
        actions: Permutations available between steps
        n: Number of outputs
        work_cap: Cap on ``(|A| * |Y|)^n`` tree nodes
        workers: Process count; first-output branches are solved in parallel
        progress_callback: Optional callback(current, total, message) per branch

    Returns:
        Tuple of (look-up policy for every reachable prefix, optimal fidelity)

    Raises:
        WorkCapExceededError: If the tree is larger than ``work_cap``
        ModelValidationError: On an invalid horizon or action set
    """
    if n < 1:
        raise ModelValidationError(f"horizon must be >= 1, got {n}")
    if len(actions) == 0:
        raise ModelValidationError("action set is empty")
    check_work("Bellman belief tree", float(len(actions) * model.num_outputs) ** n, work_cap)

    effs = actions.effective_transitions(model)
    out = np.asarray(model.out)
    problem = _Problem(
        effs=effs,
        out=out,
        final=np.einsum("yu,aut->ayt", out, effs),
        n=n,
    )

    eta0 = initial_belief(model).joint
    weights = out @ eta0.sum(axis=0)
    branches = [int(y) for y in np.flatnonzero(weights > 0)]
    firsts = [eta0 * out[y][None, :] / weights[y] for y in branches]

    if workers > 1 and len(branches) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(_solve_branch, problem, beta, y)
                for beta, y in zip(firsts, branches)
            ]
            results = []
            for i, future in enumerate(futures, 1):
                results.append(future.result())
                if progress_callback:
                    progress_callback(i, len(branches), f"branch y1={branches[i - 1]}")
    else:
        results = []
        for i, (beta, y) in enumerate(zip(firsts, branches), 1):
            results.append(_solve_branch(problem, beta, y))
            if progress_callback:
                progress_callback(i, len(branches), f"branch y1={y}")

    table: Dict[Prefix, int] = {}
    for _, sub in results:
        table.update(sub)
    fidelity = math.fsum(weights[y] * value for y, (value, _) in zip(branches, results))
    logger.info(
        "optimal policy: n=%d, |A|=%d, %d table entries, fidelity %.12g",
        n, len(actions), len(table), fidelity,
    )
    return LookupPolicy(n, actions, table, fidelity), fidelity
