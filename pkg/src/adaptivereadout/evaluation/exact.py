"""Exact infidelity by enumerating every output sequence.

Sequences are enumerated depth first. At each prefix the policy cursor is
asked for its action with the belief it would hold online, the forward
tables are advanced with that action, and zero-probability branches are
skipped. Per-level error probabilities are summed with ``math.fsum`` in
sequence order.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from adaptivereadout.algorithms.belief import belief_from_likelihoods
from adaptivereadout.algorithms.forward import (
    LikelihoodTable,
    forward_init,
    forward_step,
    map_estimate,
)
from adaptivereadout.core.common import DEFAULT_SEQUENCE_CAP, check_work
from adaptivereadout.core.errors import ModelValidationError
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.evaluation.report import EvalMethod, EvalReport
from adaptivereadout.policies.base import Policy, PolicyCursor

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class _Context:
    model: ExpandedHmm
    effs: np.ndarray
    out: np.ndarray
    row_prior: np.ndarray
    n: int


def _sum_rows(parts: List[np.ndarray], size: int) -> np.ndarray:
    if not parts:
        return np.zeros(size)
    stacked = np.stack(parts)
    return np.array([math.fsum(stacked[:, i]) for i in range(size)])


def _leaf_errors(ctx: _Context, table: LikelihoodTable) -> np.ndarray:
    estimate, _ = map_estimate(table, ctx.model.physical_prior)
    errors = table.likelihoods()
    errors[table.support.index(estimate)] = 0.0
    return errors


def _final_layer_errors(ctx: _Context, table: LikelihoodTable, eff: np.ndarray) -> np.ndarray:
    # scaled[l, y] = P(y^{n-1}, y_n = y | s1 = l) / exp(log_scale[l])
    scaled = (table.values @ eff.T) @ ctx.out.T
    live_rows = scaled.sum(axis=1) > 0
    if not np.any(live_rows):
        return np.zeros(len(table.support))
    offset = table.log_scale[live_rows].max()
    relative = np.where(live_rows, np.exp(np.where(live_rows, table.log_scale - offset, 0.0)), 0.0)
    weights = scaled * (relative * ctx.row_prior)[:, None]
    live = weights.sum(axis=0) > 0
    estimates = weights.argmax(axis=0)
    wrong = np.arange(len(table.support))[:, None] != estimates[None, :]
    contributions = scaled * np.exp(table.log_scale)[:, None] * (wrong & live[None, :])
    return np.array([math.fsum(row) for row in contributions])


def _node_errors(ctx: _Context, table: LikelihoodTable, cursor: PolicyCursor) -> np.ndarray:
    k = table.step
    if k == ctx.n:
        return _leaf_errors(ctx, table)
    belief = belief_from_likelihoods(table.values, table.log_scale, ctx.row_prior, k)
    action = cursor.choose(belief)
    eff = ctx.effs[action]
    if k == ctx.n - 1:
        return _final_layer_errors(ctx, table, eff)
    parts = []
    for y in range(ctx.model.num_outputs):
        child = forward_step(ctx.model, table, y, eff, check=False)
        if child.is_zero:
            continue
        parts.append(_node_errors(ctx, child, cursor.advance(action, y)))
    return _sum_rows(parts, len(table.support))


def _branch_errors(ctx: _Context, policy: Policy, y1: int) -> Optional[np.ndarray]:
    table = forward_init(ctx.model, y1)
    if table.is_zero:
        return None
    cursor = policy.start(ctx.n).advance(None, y1)
    return _node_errors(ctx, table, cursor)


def exact_infidelity(
    model: ExpandedHmm,
    policy: Policy,
    n: int,
    work_cap: float = DEFAULT_SEQUENCE_CAP,
    workers: int = 1,
) -> EvalReport:
    """Exact measurement infidelity of ``policy`` over ``n`` outputs.

    Args:
        model: Expanded model
        policy: Policy to evaluate; its action set must act on the model's levels
        n: Number of outputs
        work_cap: Cap on the ``|Y|^n`` sequences enumerated
        workers: Process count; first-output branches are split across workers

    Returns:
        EvalReport with per-level error probabilities

    Raises:
        WorkCapExceededError: If ``|Y|^n`` exceeds ``work_cap``
    """
    if n < 1:
        raise ModelValidationError(f"horizon must be >= 1, got {n}")
    check_work("output sequences", float(model.num_outputs) ** n, work_cap)
    support = model.initial_support
    ctx = _Context(
        model=model,
        effs=policy.actions.effective_transitions(model),
        out=np.asarray(model.out),
        row_prior=np.asarray(model.physical_prior)[list(support)],
        n=n,
    )
    branches = range(model.num_outputs)
    if workers > 1 and model.num_outputs > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_branch_errors, ctx, policy, y1) for y1 in branches]
            results = [future.result() for future in futures]
    else:
        results = [_branch_errors(ctx, policy, y1) for y1 in branches]

    errors = _sum_rows([r for r in results if r is not None], len(support))
    report = EvalReport.from_errors(
        EvalMethod.EXACT,
        n,
        support,
        errors,
        ctx.row_prior,
        sequences=model.num_outputs**n,
        policy=policy.name,
    )
    logger.debug("exact infidelity of %s at n=%d: %.12g", policy.name, n, report.infidelity)
    return report
