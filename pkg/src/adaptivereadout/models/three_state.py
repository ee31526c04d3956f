"""Three-state toy model with a hidden middle level.

Levels 0 and 2 mostly stay put and mostly report themselves; level 1 hops
to either neighbour and reports 0 or 2 at random. Parameter ``a`` is the
probability of moving to (and ``b`` of reporting) the middle level from
anywhere. The model is symmetric under exchanging labels 0 and 2.
"""

from __future__ import annotations

import numpy as np

from adaptivereadout.core.errors import ModelValidationError
from adaptivereadout.core.types import ExpandedHmm, Hmm

# Relabeling that exchanges the outer levels
MIRROR = (2, 1, 0)


def _column_matrix(p: float) -> np.ndarray:
    return np.array(
        [
            [1 - p, (1 - p) / 2, 0.0],
            [p, p, p],
            [0.0, (1 - p) / 2, 1 - p],
        ]
    )


def three_state_model(a: float, b: float) -> Hmm:
    """Build the three-state model with a uniform prior.

    Args:
        a: Probability of transitioning into level 1
        b: Probability of reporting output 1

    Returns:
        Hmm with column-stochastic ``trans`` and ``out``

    Raises:
        ModelValidationError: If ``a`` or ``b`` is outside [0, 1]
    """
    for name, value in (("a", a), ("b", b)):
        if not 0.0 <= value <= 1.0:
            raise ModelValidationError(f"{name}={value!r} must lie in [0, 1]")
    return Hmm(
        trans=_column_matrix(a),
        out=_column_matrix(b),
        prior=np.full(3, 1.0 / 3.0),
        state_labels=("0", "1", "2"),
        output_labels=("0", "1", "2"),
    )


def three_state_expanded(a: float, b: float) -> ExpandedHmm:
    """The three-state model wrapped for the policy engine."""
    return ExpandedHmm.trivial(three_state_model(a, b), {"mirror": MIRROR})
