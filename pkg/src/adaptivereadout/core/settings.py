"""Run configuration shared by every command.

A RunConfig can be loaded from / saved to JSON for reproducibility; the
resolved configuration is embedded in every output file.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, List, Optional

from adaptivereadout.core.errors import ConfigError


class Method(str, Enum):
    """Readout strategies compared in sweeps."""
    HISTOGRAM = "histogram"
    NO_PERMS = "no-perms"
    MIN_ENTROPY = "min-entropy"
    EXHAUSTIVE = "exhaustive"


# How `eval` scores a policy
EVALUATORS = ("exact", "mc", "histogram")


class ModelFamily(str, Enum):
    """How grid-point models are built."""
    THREE_STATE = "three-state"
    RATES = "rates"


@dataclass
class RunConfig:
    """Settings for one command invocation.

    Attributes mirror the command-line flags; ``None`` means "use the
    command's default".
    """

    command: str = ""
    model_path: Optional[str] = None
    policy_path: Optional[str] = None
    steps: int = 6
    bins: Optional[int] = None
    lookahead: int = 2
    actions: str = "transpositions"
    grid: Optional[str] = None
    methods: List[Method] = field(
        default_factory=lambda: [Method.NO_PERMS, Method.MIN_ENTROPY, Method.EXHAUSTIVE]
    )
    evaluator: str = "exact"
    trials: int = 100_000
    seed: int = 0
    out: Optional[str] = None
    work_cap: Optional[float] = None
    workers: int = 1

    # Model construction
    family: ModelFamily = ModelFamily.THREE_STATE
    a: Optional[float] = None
    b: Optional[float] = None
    dt_us: Optional[float] = None
    quad_points: Optional[int] = None

    def validate(self) -> RunConfig:
        """Check value ranges.

        Raises:
            ConfigError: Naming the offending field
        """
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.bins is not None and self.bins < 1:
            raise ConfigError(f"bins must be >= 1, got {self.bins}")
        if self.lookahead < 1:
            raise ConfigError(f"lookahead must be >= 1, got {self.lookahead}")
        if self.evaluator not in EVALUATORS:
            raise ConfigError(
                f"evaluator must be one of {', '.join(EVALUATORS)}, got '{self.evaluator}'"
            )
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.work_cap is not None and self.work_cap <= 0:
            raise ConfigError(f"work cap must be positive, got {self.work_cap}")
        if self.grid is not None and not self.grid.strip():
            raise ConfigError("grid specification is empty")
        if not self.methods:
            raise ConfigError("no methods selected")
        if self.quad_points is not None and self.quad_points < 1:
            raise ConfigError(f"quad_points must be >= 1, got {self.quad_points}")
        return self

    def with_overrides(self, **overrides: Any) -> RunConfig:
        """Copy with every non-None override applied."""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown settings: {sorted(unknown)}")
        changes = {k: v for k, v in overrides.items() if v is not None}
        if "methods" in changes:
            changes["methods"] = _parse_methods(changes["methods"])
        if "family" in changes:
            changes["family"] = _parse_family(changes["family"])
        return replace(self, **changes)

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> RunConfig:
        """Create RunConfig from JSON dictionary.

        Raises:
            ConfigError: On unknown keys or invalid enum values
        """
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown settings: {sorted(unknown)}")
        data = dict(data)
        if "methods" in data:
            data["methods"] = _parse_methods(data["methods"])
        if "family" in data:
            data["family"] = _parse_family(data["family"])
        return cls(**data)

    def to_json(self) -> Dict[str, Any]:
        """Convert RunConfig to JSON-serializable dictionary."""
        return {
            "command": self.command,
            "model_path": self.model_path,
            "policy_path": self.policy_path,
            "steps": self.steps,
            "bins": self.bins,
            "lookahead": self.lookahead,
            "actions": self.actions,
            "grid": self.grid,
            "methods": [m.value for m in self.methods],
            "evaluator": self.evaluator,
            "trials": self.trials,
            "seed": self.seed,
            "out": self.out,
            "work_cap": self.work_cap,
            "workers": self.workers,
            "family": self.family.value,
            "a": self.a,
            "b": self.b,
            "dt_us": self.dt_us,
            "quad_points": self.quad_points,
        }


def _parse_methods(values: Any) -> List[Method]:
    if isinstance(values, str):
        values = [v for v in values.split(",") if v.strip()]
    try:
        return [v if isinstance(v, Method) else Method(str(v).strip()) for v in values]
    except ValueError as e:
        known = ", ".join(m.value for m in Method)
        raise ConfigError(f"{e} (known methods: {known})") from e


def _parse_family(value: Any) -> ModelFamily:
    try:
        return value if isinstance(value, ModelFamily) else ModelFamily(str(value))
    except ValueError as e:
        raise ConfigError(str(e)) from e
