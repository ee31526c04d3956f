"""Output binning and the exhaustive search for the best consecutive binning."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from adaptivereadout.core.common import (
    DEFAULT_SEQUENCE_CAP,
    CountingProgressCallback,
    check_work,
)
from adaptivereadout.core.errors import ModelValidationError
from adaptivereadout.core.types import CountRange, ExpandedHmm
from adaptivereadout.evaluation.exact import exact_infidelity
from adaptivereadout.models.expansion import assemble_expanded, step_kernel_of
from adaptivereadout.policies.base import Policy
from adaptivereadout.policies.static import StaticPolicy
from adaptivereadout.structs.partition import Partition, count_partitions, enumerate_partitions

logger = logging.getLogger(__name__)

# Builds the policy to score a binned model with; must be picklable for workers
PolicyFactory = Callable[[ExpandedHmm], Policy]


@dataclass
class BinningResult:
    """Outcome of a binning search.

    Attributes:
        partition: Best partition found
        infidelity: Infidelity of the model binned with ``partition``
        candidates: Every candidate with its infidelity, in enumeration order
    """

    partition: Partition
    infidelity: float
    candidates: List[Tuple[Partition, float]]

    def csv_rows(self) -> List[List[str]]:
        rows = [["boundaries", "infidelity"]]
        for partition, infidelity in self.candidates:
            rows.append([" ".join(str(b) for b in partition.boundaries), repr(infidelity)])
        return rows


def bin_model(model: ExpandedHmm, partition: Partition) -> ExpandedHmm:
    """Merge outputs into the bins of ``partition``.

    Transitions into ``(s, b_i)`` sum the kernel over the outputs in
    ``b_i``; the prior is regrouped the same way. Binning an already binned
    model composes the raw-count ranges.

    Raises:
        ModelValidationError: If the model has no output memory, its
            transitions depend on the remembered output, or the partition
            does not cover its outputs
    """
    if model.rho is None:
        raise ModelValidationError("only models with output memory can be binned")
    if partition.num_outputs != model.num_outputs:
        raise ModelValidationError(
            f"partition covers {partition.num_outputs} outputs, model has {model.num_outputs}"
        )
    kernel = step_kernel_of(model)
    starts = partition.starts
    binned_kernel = np.add.reduceat(kernel, starts, axis=1)
    joint_prior = np.asarray(model.prior).reshape(model.num_physical, model.num_outputs)
    binned_prior = np.add.reduceat(joint_prior, starts, axis=1)

    previous: List[CountRange] = (
        [(y, y + 1) for y in range(model.num_outputs)] if model.bins is None else list(model.bins)
    )
    bins = [(previous[lo][0], previous[hi - 1][1]) for lo, hi in partition.bins()]
    return assemble_expanded(
        binned_kernel,
        binned_prior,
        bins,
        model.permutations,
        model.physical_labels,
    )


def _score_partition(
    model: ExpandedHmm,
    partition: Partition,
    n: int,
    policy_factory: Optional[PolicyFactory],
    work_cap: float,
) -> float:
    binned = bin_model(model, partition)
    policy = (
        StaticPolicy.no_permutations(binned.num_physical)
        if policy_factory is None
        else policy_factory(binned)
    )
    return exact_infidelity(binned, policy, n, work_cap=work_cap).infidelity


def optimize_binning(
    model: ExpandedHmm,
    n_b: int,
    n: int,
    policy_factory: Optional[PolicyFactory] = None,
    work_cap: float = DEFAULT_SEQUENCE_CAP,
    workers: int = 1,
    progress_callback: Optional[CountingProgressCallback] = None,
) -> BinningResult:
    """Exhaustively search consecutive partitions into ``n_b`` bins.

    Each candidate is scored by the exact infidelity at horizon ``n`` of
    the binned model under the policy built by ``policy_factory`` (no
    permutations by default). Ties keep the lexicographically smallest
    boundary list.

    Args:
        model: Unbinned (or coarser-binned) expanded model
        n_b: Number of bins
        n: Horizon for scoring
        policy_factory: Builds the scoring policy for a binned model
        work_cap: Cap on ``n_b^n`` sequences per evaluation
        workers: Process count for scoring candidates
        progress_callback: Optional callback(current, total, message)

    Raises:
        WorkCapExceededError: If ``n_b^n`` exceeds ``work_cap``
        ModelValidationError: If ``n_b`` is outside ``1..|Y|``
    """
    if not 1 <= n_b <= model.num_outputs:
        raise ModelValidationError(f"n_b={n_b} must be within 1..{model.num_outputs}")
    check_work("binned output sequences", float(n_b) ** n, work_cap)
    partitions = list(enumerate_partitions(model.num_outputs, n_b))
    total = count_partitions(model.num_outputs, n_b)
    logger.info("searching %d partitions into %d bins at n=%d", total, n_b, n)

    scores: List[float] = []
    if workers > 1 and total > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(_score_partition, model, p, n, policy_factory, work_cap)
                for p in partitions
            ]
            for i, future in enumerate(futures, 1):
                scores.append(future.result())
                if progress_callback:
                    progress_callback(i, total, partitions[i - 1].label())
    else:
        for i, partition in enumerate(partitions, 1):
            scores.append(_score_partition(model, partition, n, policy_factory, work_cap))
            if progress_callback:
                progress_callback(i, total, partition.label())

    best = 0
    for i in range(1, len(scores)):
        if scores[i] < scores[best]:
            best = i
    logger.info("best partition %s, infidelity %.6g", partitions[best].label(), scores[best])
    return BinningResult(partitions[best], scores[best], list(zip(partitions, scores)))
