"""Histogram method: classify on the total photon count over all steps."""

from __future__ import annotations

import logging
import math

import numpy as np

from adaptivereadout.algorithms.belief import initial_belief
from adaptivereadout.core.errors import ModelValidationError
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.evaluation.report import EvalMethod, EvalReport

logger = logging.getLogger(__name__)


def total_count_distribution(model: ExpandedHmm, n: int) -> np.ndarray:
    """``P(total count = m | s1)`` for every level of the support.

    Dynamic programming over (current expanded state, cumulative count),
    with per-step outputs read as raw photon counts.

    Returns:
        Array of shape (|L|, n * max_count + 1)

    Raises:
        ModelValidationError: If the outputs are bins wider than one count
    """
    if n < 1:
        raise ModelValidationError(f"horizon must be >= 1, got {n}")
    if model.bins is not None and any(stop - start != 1 for start, stop in model.bins):
        raise ModelValidationError("histogram method needs raw photon counts, model outputs are bins")
    counts = np.asarray(model.output_counts)
    max_count = int(counts.max())
    size = n * max_count + 1
    out = np.asarray(model.out)

    # conditional start: eta_0 rows normalized per initial level
    start = initial_belief(model).joint
    start = start / start.sum(axis=1, keepdims=True)

    dist = np.zeros((start.shape[0], model.num_states, size))
    for y, c in enumerate(counts):
        dist[:, :, c] += start * out[y][None, :]
    for _ in range(n - 1):
        moved = np.einsum("ij,ljm->lim", model.trans, dist)
        dist = np.zeros_like(moved)
        for y, c in enumerate(counts):
            dist[:, :, c:] += moved[:, :, : size - c] * out[y][None, :, None]
    return dist.sum(axis=1)


def histogram_infidelity(model: ExpandedHmm, n: int) -> EvalReport:
    """Infidelity of the MAP estimate from the total count over ``n`` steps."""
    totals = total_count_distribution(model, n)
    support = model.initial_support
    row_prior = np.asarray(model.physical_prior)[list(support)]
    weights = totals * row_prior[:, None]
    live = weights.sum(axis=0) > 0
    estimates = weights.argmax(axis=0)
    wrong = (np.arange(len(support))[:, None] != estimates[None, :]) & live[None, :]
    errors = [math.fsum(row) for row in totals * wrong]
    report = EvalReport.from_errors(
        EvalMethod.HISTOGRAM,
        n,
        support,
        errors,
        row_prior,
        sequences=totals.shape[1],
        policy="histogram",
    )
    logger.debug("histogram infidelity at n=%d: %.12g", n, report.infidelity)
    return report
