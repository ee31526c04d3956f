"""Parameter sweeps over model grids."""

from .config import PRESETS, get_preset, list_presets, sweep_grid
from .engine import CSV_HEADER, PointResult, SweepEngine, infidelity_ratio
from .grid import GridSpec, parse_grid, parse_range

__all__ = [
    "PRESETS",
    "get_preset",
    "list_presets",
    "sweep_grid",
    "CSV_HEADER",
    "PointResult",
    "SweepEngine",
    "infidelity_ratio",
    "GridSpec",
    "parse_grid",
    "parse_range",
]
