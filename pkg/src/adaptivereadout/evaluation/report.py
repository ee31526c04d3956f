"""Evaluation report shared by the exact, histogram and Monte Carlo evaluators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np


class EvalMethod(str, Enum):
    """How an infidelity was obtained."""
    EXACT = "exact"
    MONTE_CARLO = "monte-carlo"
    HISTOGRAM = "histogram"


@dataclass(frozen=True)
class EvalReport:
    """Measurement infidelity of one policy (or the histogram method).

    Attributes:
        method: Evaluation method
        n: Number of outputs
        infidelity: P(estimate != initial level), averaged over the prior
        fidelity: 1 - infidelity
        support: Initial levels the per-state errors refer to
        per_state_error: P(estimate != s1 | s1) for each level of the support
        sequences: Output sequences enumerated (exact, histogram)
        trials: Trajectories sampled (monte-carlo)
        stderr: Binomial standard error (monte-carlo)
        seed: RNG seed (monte-carlo)
        policy: Name of the evaluated policy
    """

    method: EvalMethod
    n: int
    infidelity: float
    fidelity: float
    support: Tuple[int, ...]
    per_state_error: Tuple[float, ...]
    sequences: Optional[int] = None
    trials: Optional[int] = None
    stderr: Optional[float] = None
    seed: Optional[int] = None
    policy: Optional[str] = None

    @classmethod
    def from_errors(
        cls,
        method: EvalMethod,
        n: int,
        support: Sequence[int],
        per_state_error: Sequence[float],
        row_prior: np.ndarray,
        **extra: Any,
    ) -> EvalReport:
        """Build a report from per-level errors and the prior over the support."""
        infidelity = math.fsum(float(p) * float(e) for p, e in zip(row_prior, per_state_error))
        infidelity = min(max(infidelity, 0.0), 1.0)
        return cls(
            method=method,
            n=n,
            infidelity=infidelity,
            fidelity=1.0 - infidelity,
            support=tuple(int(s) for s in support),
            per_state_error=tuple(float(e) for e in per_state_error),
            **extra,
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "method": self.method.value,
            "n": self.n,
            "infidelity": self.infidelity,
            "fidelity": self.fidelity,
            "per_state_error": {str(s): e for s, e in zip(self.support, self.per_state_error)},
            "sequences": self.sequences,
            "trials": self.trials,
            "stderr": self.stderr,
            "seed": self.seed,
            "policy": self.policy,
        }
