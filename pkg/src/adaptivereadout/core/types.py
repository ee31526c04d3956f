"""Core model types: plain and expanded hidden Markov models.

Matrices are stored with columns indexed by the source (conditioning) state:
``trans[dest, src] = A(dest | src)`` and ``out[y, s] = B(y | s)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from adaptivereadout.core.common import RENORMALIZE_TOL, STOCHASTIC_TOL
from adaptivereadout.core.errors import ModelValidationError

logger = logging.getLogger(__name__)

# Raw-count range [start, stop) covered by one output symbol
CountRange = Tuple[int, int]


def _frozen_array(values: object, dtype: type = float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Hmm:
    """Finite-state, finite-output hidden Markov model.

    Attributes:
        trans: Transition matrix, shape (num_states, num_states), column-stochastic
        out: Output matrix, shape (num_outputs, num_states), column-stochastic
        prior: Initial state distribution, shape (num_states,)
        state_labels: Optional display names for states
        output_labels: Optional display names for outputs
    """

    trans: np.ndarray
    out: np.ndarray
    prior: np.ndarray
    state_labels: Optional[Tuple[str, ...]] = None
    output_labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "trans", _frozen_array(self.trans))
        object.__setattr__(self, "out", _frozen_array(self.out))
        object.__setattr__(self, "prior", _frozen_array(self.prior))
        if self.state_labels is not None:
            object.__setattr__(self, "state_labels", tuple(str(s) for s in self.state_labels))
        if self.output_labels is not None:
            object.__setattr__(self, "output_labels", tuple(str(s) for s in self.output_labels))
        self._check_dimensions()

    def _check_dimensions(self) -> None:
        if self.trans.ndim != 2 or self.trans.shape[0] != self.trans.shape[1]:
            raise ModelValidationError(f"trans must be square, got shape {self.trans.shape}")
        n = self.trans.shape[0]
        if n < 1:
            raise ModelValidationError("model needs at least one state")
        if self.out.ndim != 2 or self.out.shape[1] != n or self.out.shape[0] < 1:
            raise ModelValidationError(
                f"out must have shape (num_outputs, {n}), got {self.out.shape}"
            )
        if self.prior.shape != (n,):
            raise ModelValidationError(f"prior must have shape ({n},), got {self.prior.shape}")
        if self.state_labels is not None and len(self.state_labels) != n:
            raise ModelValidationError(f"expected {n} state labels, got {len(self.state_labels)}")
        if self.output_labels is not None and len(self.output_labels) != self.out.shape[0]:
            raise ModelValidationError(
                f"expected {self.out.shape[0]} output labels, got {len(self.output_labels)}"
            )

    @property
    def num_states(self) -> int:
        return int(self.trans.shape[0])

    @property
    def num_outputs(self) -> int:
        return int(self.out.shape[0])


@dataclass(frozen=True, eq=False)
class ExpandedHmm:
    """HMM over expanded states (physical level, last output).

    Expanded state ``t`` encodes the pair ``(alpha[t], rho[t])`` as
    ``t = alpha[t] * num_outputs + rho[t]``. A model without output memory
    (the three-state model, for example) is wrapped with ``rho = None`` and
    ``alpha`` equal to the identity, see :meth:`trivial`.

    Attributes:
        hmm: Model over the expanded state space T
        num_physical: Number of physical levels |S|
        alpha: Physical level of each expanded state
        rho: Remembered output of each expanded state, or None
        bins: Raw-count range of each output symbol when outputs are bins,
            None when outputs are raw counts
        permutations: Named physical permutations carried with the model
        physical_labels: Optional display names for physical levels
    """

    hmm: Hmm
    num_physical: int
    alpha: np.ndarray
    rho: Optional[np.ndarray] = None
    bins: Optional[Tuple[CountRange, ...]] = None
    permutations: Dict[str, Tuple[int, ...]] = field(default_factory=dict)
    physical_labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", _frozen_array(self.alpha, dtype=np.int64))
        if self.rho is not None:
            object.__setattr__(self, "rho", _frozen_array(self.rho, dtype=np.int64))
        if self.bins is not None:
            object.__setattr__(self, "bins", tuple((int(a), int(b)) for a, b in self.bins))
        object.__setattr__(
            self,
            "permutations",
            {str(k): tuple(int(v) for v in p) for k, p in self.permutations.items()},
        )
        if self.physical_labels is not None:
            object.__setattr__(
                self, "physical_labels", tuple(str(s) for s in self.physical_labels)
            )
        self._check_layout()

    def _check_layout(self) -> None:
        t_count = self.hmm.num_states
        y_count = self.hmm.num_outputs
        if self.alpha.shape != (t_count,):
            raise ModelValidationError(f"alpha must have length {t_count}")
        if self.alpha.min() < 0 or self.alpha.max() >= self.num_physical:
            raise ModelValidationError("alpha maps outside the physical state space")
        if self.rho is None:
            if t_count != self.num_physical or not np.array_equal(
                self.alpha, np.arange(t_count)
            ):
                raise ModelValidationError("a model without rho must have alpha = identity")
        else:
            if t_count != self.num_physical * y_count:
                raise ModelValidationError(
                    f"|T|={t_count} must equal |S|*|Y|={self.num_physical * y_count}"
                )
            index = np.arange(t_count)
            if not (
                np.array_equal(self.alpha, index // y_count)
                and np.array_equal(self.rho, index % y_count)
            ):
                raise ModelValidationError("expanded states must be laid out as s*|Y|+o")
        if self.bins is not None and len(self.bins) != y_count:
            raise ModelValidationError(f"expected {y_count} bins, got {len(self.bins)}")
        for name, perm in self.permutations.items():
            if sorted(perm) != list(range(self.num_physical)):
                raise ModelValidationError(f"permutation '{name}' is not a bijection on S")
        if self.physical_labels is not None and len(self.physical_labels) != self.num_physical:
            raise ModelValidationError(f"expected {self.num_physical} physical labels")

    @classmethod
    def trivial(
        cls,
        hmm: Hmm,
        permutations: Optional[Dict[str, Tuple[int, ...]]] = None,
    ) -> ExpandedHmm:
        """Wrap a plain HMM without output memory.

        Args:
            hmm: Model whose states are the physical levels
            permutations: Optional named permutations

        Returns:
            ExpandedHmm with alpha = identity and rho = None
        """
        return cls(
            hmm=hmm,
            num_physical=hmm.num_states,
            alpha=np.arange(hmm.num_states),
            rho=None,
            permutations=dict(permutations or {}),
            physical_labels=hmm.state_labels,
        )

    @property
    def num_states(self) -> int:
        return self.hmm.num_states

    @property
    def num_outputs(self) -> int:
        return self.hmm.num_outputs

    @property
    def trans(self) -> np.ndarray:
        return self.hmm.trans

    @property
    def out(self) -> np.ndarray:
        return self.hmm.out

    @property
    def prior(self) -> np.ndarray:
        return self.hmm.prior

    @cached_property
    def physical_prior(self) -> np.ndarray:
        """Prior mass of each physical level, summed over expanded states."""
        mass = np.bincount(self.alpha, weights=self.prior, minlength=self.num_physical)
        mass.setflags(write=False)
        return mass

    @cached_property
    def initial_support(self) -> Tuple[int, ...]:
        """Physical levels L with nonzero prior mass, in increasing order."""
        return tuple(int(s) for s in np.flatnonzero(self.physical_prior > 0))

    @property
    def output_counts(self) -> Tuple[int, ...]:
        """Smallest raw count represented by each output symbol."""
        if self.bins is None:
            return tuple(range(self.num_outputs))
        return tuple(start for start, _ in self.bins)

    def induced_permutation(self, perm: Sequence[int]) -> np.ndarray:
        """Lift a physical permutation to expanded states.

        The lift keeps the remembered output: ``(s, o) -> (perm[s], o)``.
        """
        sigma = np.asarray(perm, dtype=np.int64)
        if sigma.shape != (self.num_physical,):
            raise ModelValidationError(
                f"permutation must have length {self.num_physical}, got {sigma.shape}"
            )
        if self.rho is None:
            return sigma.copy()
        return sigma[self.alpha] * self.num_outputs + self.rho

    def effective_transition(self, perm: Sequence[int]) -> np.ndarray:
        """Transition matrix after applying a permutation before the step.

        Column ``t`` is column ``induced(t)`` of A, so the result stays
        column-stochastic.
        """
        return np.ascontiguousarray(self.trans[:, self.induced_permutation(perm)])


ModelLike = Union[Hmm, ExpandedHmm]


def _column_issues(matrix: np.ndarray, name: str, renormalize: bool) -> Optional[np.ndarray]:
    """Check a column-stochastic matrix; return a renormalized copy if needed."""
    if not np.all(np.isfinite(matrix)):
        col = int(np.argwhere(~np.isfinite(matrix))[0][-1])
        raise ModelValidationError(f"{name}: non-finite entry in column {col}")
    negative = np.argwhere(matrix < 0)
    if negative.size:
        row, col = (int(v) for v in negative[0])
        raise ModelValidationError(
            f"{name}: negative entry {matrix[row, col]!r} at row {row}, column {col}"
        )
    above = np.argwhere(matrix > 1 + STOCHASTIC_TOL)
    if above.size:
        row, col = (int(v) for v in above[0])
        raise ModelValidationError(
            f"{name}: entry {matrix[row, col]!r} above 1 at row {row}, column {col}"
        )
    sums = matrix.sum(axis=0)
    deviation = np.abs(sums - 1.0)
    if np.all(deviation <= STOCHASTIC_TOL):
        return None
    worst = int(np.argmax(deviation))
    if renormalize and deviation[worst] <= RENORMALIZE_TOL:
        logger.warning(
            "%s: renormalizing columns (max deviation %.3g in column %d)",
            name, deviation[worst], worst,
        )
        return matrix / sums[None, :]
    raise ModelValidationError(f"{name}: column {worst} sums to {sums[worst]!r}, expected 1")


def _validate_hmm(model: Hmm, renormalize: bool) -> Hmm:
    model._check_dimensions()
    trans = _column_issues(model.trans, "trans", renormalize)
    out = _column_issues(model.out, "out", renormalize)
    prior = _column_issues(model.prior[:, None], "prior", renormalize)
    if trans is None and out is None and prior is None:
        return model
    return replace(
        model,
        trans=model.trans if trans is None else trans,
        out=model.out if out is None else out,
        prior=model.prior if prior is None else prior[:, 0],
    )


def validate(model: ModelLike, renormalize: bool = True) -> ModelLike:
    """Check the stochasticity invariants of a model.

    Columns of ``trans`` and ``out`` and the prior must be probability
    distributions within 1e-9. Columns off by at most 1e-6 are renormalized
    when ``renormalize`` is set. For expanded models with output memory the
    output matrix must be deterministic (``B(o|t) = 1`` iff ``o = rho(t)``)
    and the prior may only put mass on ``o = 0``.

    Args:
        model: Plain or expanded model
        renormalize: Rescale columns that are within the renormalization tolerance

    Returns:
        The model itself if it was valid, otherwise a renormalized copy

    Raises:
        ModelValidationError: Naming the offending row/column on any violation
    """
    if isinstance(model, Hmm):
        return _validate_hmm(model, renormalize)

    hmm = _validate_hmm(model.hmm, renormalize)
    if model.rho is not None:
        expected = np.zeros_like(hmm.out)
        expected[model.rho, np.arange(model.num_states)] = 1.0
        mismatch = np.argwhere(np.abs(hmm.out - expected) > STOCHASTIC_TOL)
        if mismatch.size:
            col = int(mismatch[0][1])
            raise ModelValidationError(f"out: column {col} is not the deterministic memory output")
        stray = np.flatnonzero((hmm.prior > 0) & (model.rho != 0))
        if stray.size:
            raise ModelValidationError(
                f"prior: expanded state {int(stray[0])} has mass with nonzero remembered output"
            )
    if hmm is model.hmm:
        return model
    return replace(model, hmm=hmm)
