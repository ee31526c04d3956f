"""Sweep presets built on top of the run configuration."""

from __future__ import annotations

from typing import Dict, List

from adaptivereadout.core.errors import ConfigError
from adaptivereadout.core.settings import Method, ModelFamily, RunConfig
from adaptivereadout.sweep.grid import GridSpec, parse_grid

# Preset configurations for common use cases
PRESETS: Dict[str, RunConfig] = {
    # gain of adaptive permutations over the (a, b) plane
    "three_state_gain": RunConfig(
        command="sweep",
        family=ModelFamily.THREE_STATE,
        grid="a=0.005:0.3:10:log,b=0.005:0.3:10:log",
        steps=6,
        actions="transpositions",
        methods=[Method.NO_PERMS, Method.MIN_ENTROPY, Method.EXHAUSTIVE],
    ),
    # a = b cut through the gain plane
    "three_state_diagonal": RunConfig(
        command="sweep",
        family=ModelFamily.THREE_STATE,
        grid="ab=0.005:0.3:20:log",
        steps=2,
        actions="transpositions",
        methods=[Method.NO_PERMS, Method.EXHAUSTIVE],
    ),
    # all four readout methods against the step duration
    "fluorescence_dt": RunConfig(
        command="sweep",
        family=ModelFamily.RATES,
        grid="dt_us=10:200:20",
        steps=6,
        bins=4,
        actions="tau",
        methods=[Method.HISTOGRAM, Method.NO_PERMS, Method.MIN_ENTROPY, Method.EXHAUSTIVE],
    ),
}


def get_preset(name: str) -> RunConfig:
    """Get a preset configuration by name.

    Raises:
        ConfigError: If the preset is unknown
    """
    if name not in PRESETS:
        available = ", ".join(PRESETS.keys())
        raise ConfigError(f"Unknown preset '{name}'. Available: {available}")
    return PRESETS[name]


def list_presets() -> List[str]:
    return list(PRESETS.keys())


def sweep_grid(config: RunConfig) -> GridSpec:
    """Parsed grid of a sweep configuration, checked against its model family.

    Raises:
        ConfigError: If the grid is missing or does not fit the family
    """
    if not config.grid:
        raise ConfigError("sweep needs a grid")
    grid = parse_grid(config.grid)
    if config.family is ModelFamily.THREE_STATE and grid.name == "dt_us":
        raise ConfigError("three-state sweeps vary a and b, not dt_us")
    if config.family is ModelFamily.RATES and grid.name != "dt_us":
        raise ConfigError("rate-model sweeps vary dt_us")
    return grid
