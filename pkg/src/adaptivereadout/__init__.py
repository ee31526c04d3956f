"""Adaptive readout - permutation policies for hidden Markov model readout.

This package builds hidden Markov models of a measured system, solves for
adaptive policies that permute hidden states between measurement steps,
and evaluates how often each policy misidentifies the initial state.

Example:
    >>> from adaptivereadout.models.three_state import three_state_expanded
    >>> from adaptivereadout.algorithms.bellman import solve_optimal
    >>> from adaptivereadout.structs.permutation import ActionSet
    >>> model = three_state_expanded(0.01, 0.01)
    >>> policy, fidelity = solve_optimal(model, ActionSet.transpositions(3), 4)
"""

__version__ = "0.1.0"

from adaptivereadout.core.settings import RunConfig
from adaptivereadout.core.types import ExpandedHmm, Hmm, validate

__all__ = [
    "__version__",
    "Hmm",
    "ExpandedHmm",
    "RunConfig",
    "validate",
]
