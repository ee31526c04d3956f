"""Exception hierarchy for the readout toolkit.

Every error raised on purpose by the package derives from ReadoutError, so
callers (and the CLI) can map failures to exit codes without string matching.
"""

from __future__ import annotations


class ReadoutError(Exception):
    """Base class for all package errors."""


class ModelValidationError(ReadoutError, ValueError):
    """A model, partition, permutation or action set violates its invariants."""


class ConfigError(ReadoutError, ValueError):
    """A run configuration or grid specification is invalid."""


class ImpossibleObservationError(ReadoutError, ValueError):
    """An observation (or sequence) has zero probability under the model."""


class WorkCapExceededError(ReadoutError):
    """An enumeration would exceed its configured work cap.

    Attributes:
        required: Estimated amount of work (sequences, nodes, ...)
        cap: Configured cap
    """

    def __init__(self, what: str, required: float, cap: float) -> None:
        self.required = required
        self.cap = cap
        super().__init__(f"{what}: {required:.3g} exceeds work cap {cap:.3g}")


class NumericError(ReadoutError, ArithmeticError):
    """A numerical routine failed or lost stochasticity beyond tolerance."""


class PolicyError(ReadoutError, KeyError):
    """A policy cannot produce an action for the requested history."""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep messages readable
        return str(self.args[0]) if self.args else ""
