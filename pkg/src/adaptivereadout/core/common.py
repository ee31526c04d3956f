"""Common utilities and types."""

from __future__ import annotations
from typing import Callable

from adaptivereadout.core.errors import WorkCapExceededError

# Tolerances shared across modules
STOCHASTIC_TOL = 1e-9
RENORMALIZE_TOL = 1e-6
TIE_TOL = 1e-12

# Default work caps
DEFAULT_SEQUENCE_CAP = 10**7
DEFAULT_NODE_CAP = 10**8
DEFAULT_POMDP_STATE_CAP = 10**6

# Type alias for progress callbacks
ProgressCallback = Callable[[str, float], None]
CountingProgressCallback = Callable[[int, int, str], None]


def check_work(what: str, required: float, cap: float) -> None:
    """Raise if an enumeration would exceed its work cap.

    Args:
        what: Human readable name of the enumeration
        required: Amount of work the enumeration needs
        cap: Configured cap

    Raises:
        WorkCapExceededError: If required > cap
    """
    if required > cap:
        raise WorkCapExceededError(what, required, cap)
