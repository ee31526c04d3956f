"""Forward recursion over expanded states and initial-state inference.

The likelihood table holds ``P(y^k, t_k | s1)`` for every initial physical
level ``s1`` in the prior support L and every expanded state ``t``. Rows are
rescaled to unit maximum once they drop below ``RESCALE_THRESHOLD``; the
accumulated natural-log scale of each row is kept in ``log_scale``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from adaptivereadout.core.common import STOCHASTIC_TOL, TIE_TOL
from adaptivereadout.core.errors import ImpossibleObservationError, ModelValidationError
from adaptivereadout.core.types import ExpandedHmm

RESCALE_THRESHOLD = 1e-30


@dataclass(frozen=True, eq=False)
class LikelihoodTable:
    """Scaled joint likelihoods of an output prefix.

    Attributes:
        values: Array of shape (|L|, |T|); ``values[i, t] * exp(log_scale[i])``
            equals ``P(y^k, t_k = t | s1 = support[i])``
        log_scale: Accumulated rescaling exponent per row
        support: Physical levels indexing the rows
        step: Number of outputs absorbed
    """

    values: np.ndarray
    log_scale: np.ndarray
    support: Tuple[int, ...]
    step: int

    def likelihoods(self) -> np.ndarray:
        """Unscaled ``P(y^k | s1)`` for every row."""
        return self.values.sum(axis=1) * np.exp(self.log_scale)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values > 0)


def _check_output(model: ExpandedHmm, y: int) -> None:
    if not 0 <= y < model.num_outputs:
        raise ModelValidationError(f"output {y} out of range 0..{model.num_outputs - 1}")


def _rescale(values: np.ndarray, log_scale: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    peaks = values.max(axis=1)
    small = (peaks > 0) & (peaks < RESCALE_THRESHOLD)
    if not np.any(small):
        return values, log_scale
    factors = np.where(small, peaks, 1.0)
    return values / factors[:, None], log_scale + np.log(factors)


def forward_init(model: ExpandedHmm, y1: int) -> LikelihoodTable:
    """Likelihood table after the first output.

    ``table[s1, t] = B(y1|t) * [alpha(t) = s1] * prior(t) / P(S1 = s1)``

    Raises:
        ModelValidationError: If ``y1`` is out of range or a level of the
            support has no prior mass
    """
    _check_output(model, y1)
    support = model.initial_support
    if not support:
        raise ModelValidationError("prior has no mass on any physical level")
    values = np.zeros((len(support), model.num_states))
    for row, s1 in enumerate(support):
        mask = model.alpha == s1
        mass = float(model.prior[mask].sum())
        if mass <= 0:
            raise ModelValidationError(f"level {s1} has zero prior mass")
        values[row, mask] = model.prior[mask] / mass
    values *= model.out[y1][None, :]
    table_values, log_scale = _rescale(values, np.zeros(len(support)))
    return LikelihoodTable(table_values, log_scale, support, 1)


def forward_step(
    model: ExpandedHmm,
    table: LikelihoodTable,
    y: int,
    effective_trans: Optional[np.ndarray] = None,
    check: bool = True,
) -> LikelihoodTable:
    """Absorb one more output after a (possibly permuted) transition.

    ``new[s1, t] = B(y|t) * sum_t' effective_trans[t, t'] * old[s1, t']``

    Args:
        model: Expanded model
        table: Table for the current prefix
        y: Next output
        effective_trans: Transition to apply, defaults to the model's own
        check: Validate ``effective_trans`` shape and stochasticity

    Raises:
        ModelValidationError: If ``y`` is out of range or ``effective_trans``
            is not column-stochastic over T
    """
    _check_output(model, y)
    eff = model.trans if effective_trans is None else effective_trans
    if check and effective_trans is not None:
        if eff.shape != (model.num_states, model.num_states):
            raise ModelValidationError(
                f"effective transition has shape {eff.shape}, expected "
                f"{(model.num_states, model.num_states)}"
            )
        sums = eff.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL)
        if bad.size or np.any(eff < 0):
            col = int(bad[0]) if bad.size else int(np.argwhere(eff < 0)[0][1])
            raise ModelValidationError(f"effective transition column {col} is not a distribution")
    values = (table.values @ eff.T) * model.out[y][None, :]
    values, log_scale = _rescale(values, table.log_scale)
    return LikelihoodTable(values, log_scale, table.support, table.step + 1)


def forward_sequence(
    model: ExpandedHmm,
    outputs: Sequence[int],
    transitions: Optional[Sequence[np.ndarray]] = None,
) -> LikelihoodTable:
    """Run the recursion over a whole output sequence.

    Args:
        model: Expanded model
        outputs: ``y_1 .. y_n``
        transitions: Effective transitions applied before ``y_2 .. y_n``;
            defaults to the unpermuted model
    """
    if not outputs:
        raise ModelValidationError("output sequence is empty")
    if transitions is not None and len(transitions) != len(outputs) - 1:
        raise ModelValidationError(
            f"expected {len(outputs) - 1} transitions, got {len(transitions)}"
        )
    table = forward_init(model, outputs[0])
    for k, y in enumerate(outputs[1:]):
        eff = None if transitions is None else transitions[k]
        table = forward_step(model, table, y, eff)
    return table


def map_estimate(
    table: LikelihoodTable, prior: Optional[np.ndarray] = None
) -> Tuple[int, np.ndarray]:
    """Most probable initial level given the table.

    With ``prior`` (indexed by physical level) this is the MAP estimate;
    without it, maximum likelihood. Posteriors within ``TIE_TOL`` of the
    maximum tie, and ties go to the lowest level.

    Returns:
        Tuple of (estimated level, posterior over the support rows)

    Raises:
        ImpossibleObservationError: If the table is all zero
    """
    sums = table.values.sum(axis=1)
    if not np.any(sums > 0):
        raise ImpossibleObservationError(
            f"output prefix of length {table.step} has zero probability under the model"
        )
    live = sums > 0
    offset = table.log_scale[live].max()
    weights = np.where(live, sums * np.exp(np.where(live, table.log_scale - offset, 0.0)), 0.0)
    if prior is not None:
        weights = weights * np.asarray(prior)[list(table.support)]
        if not np.any(weights > 0):
            raise ImpossibleObservationError("output prefix has zero posterior mass")
    posterior = weights / weights.sum()
    best = int(np.flatnonzero(posterior >= posterior.max() - TIE_TOL)[0])
    return table.support[best], posterior
