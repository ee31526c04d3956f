"""Grid specifications for parameter sweeps.

Syntax (one axis per ``name=range`` item, items separated by commas)::

    dt_us=10:200:20           20 linearly spaced step durations
    dt_us=10:200:20:log       20 log-spaced step durations
    a=0.005:0.3:10:log,b=0.005:0.3:10:log
                              10 x 10 product grid over (a, b)
    ab=0.005:0.3:10:log       a = b diagonal
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from adaptivereadout.core.errors import ConfigError

GRID_AXES = ("dt_us", "a", "b", "ab")


@dataclass(frozen=True)
class GridSpec:
    """Parsed grid.

    Attributes:
        name: Parameter label used in the CSV (``dt_us``, ``a,b`` or ``ab``)
        points: Parameter values of every grid point, in sweep order
    """

    name: str
    points: Tuple[Dict[str, float], ...]

    @property
    def is_gain_grid(self) -> bool:
        """True for (a, b) grids, which report the optimal-vs-no-perms ratio."""
        return "a" in self.points[0]

    def label(self, point: Dict[str, float]) -> str:
        if self.name == "dt_us":
            return repr(point["dt_us"])
        if self.name == "ab":
            return repr(point["a"])
        return f"{point['a']!r};{point['b']!r}"

    def __len__(self) -> int:
        return len(self.points)


def parse_range(text: str) -> List[float]:
    """Parse ``start:stop:count[:log]`` into a list of values.

    Raises:
        ConfigError: On malformed ranges
    """
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
        raise ConfigError(f"range '{text}' must be start:stop:count[:log]")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as e:
        raise ConfigError(f"range '{text}': {e}") from e
    if count < 1:
        raise ConfigError(f"range '{text}' needs at least one point")
    if len(parts) == 4:
        if start <= 0 or stop <= 0:
            raise ConfigError(f"log range '{text}' needs positive bounds")
        values = np.geomspace(start, stop, count)
    else:
        values = np.linspace(start, stop, count)
    return [float(v) for v in values]


def parse_grid(text: str) -> GridSpec:
    """Parse a grid specification.

    Raises:
        ConfigError: On unknown axes, mixed axes or empty grids
    """
    axes: Dict[str, List[float]] = {}
    for item in (part.strip() for part in text.split(",")):
        if not item:
            continue
        name, sep, rng = item.partition("=")
        name = name.strip()
        if not sep or name not in GRID_AXES:
            raise ConfigError(f"grid item '{item}' must be one of {', '.join(GRID_AXES)}=range")
        if name in axes:
            raise ConfigError(f"grid axis '{name}' given twice")
        axes[name] = parse_range(rng.strip())
    if not axes:
        raise ConfigError("grid specification is empty")

    keys = set(axes)
    if keys == {"dt_us"}:
        return GridSpec("dt_us", tuple({"dt_us": v} for v in axes["dt_us"]))
    if keys == {"ab"}:
        return GridSpec("ab", tuple({"a": v, "b": v} for v in axes["ab"]))
    if keys == {"a", "b"}:
        return GridSpec(
            "a,b",
            tuple({"a": a, "b": b} for a, b in itertools.product(axes["a"], axes["b"])),
        )
    raise ConfigError(f"unsupported axis combination {sorted(keys)}")
