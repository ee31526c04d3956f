"""Tests for sweep grids, presets and the sweep engine."""

import math
from pathlib import Path

import numpy as np
import pytest

from adaptivereadout.core.errors import ConfigError
from adaptivereadout.core.settings import Method, ModelFamily, RunConfig
from adaptivereadout.output.serialization import read_csv, read_json
from adaptivereadout.sweep import (
    CSV_HEADER,
    SweepEngine,
    get_preset,
    infidelity_ratio,
    list_presets,
    parse_grid,
    parse_range,
    sweep_grid,
)


class TestGrid:
    """Test grid parsing."""

    def test_linear_range(self) -> None:
        """Test evenly spaced values including both ends."""
        assert parse_range("10:200:20") == pytest.approx(list(np.linspace(10, 200, 20)))
        assert parse_range("1:1:1") == [1.0]

    def test_log_range(self) -> None:
        """Test log-spaced values."""
        values = parse_range("0.01:1:3:log")
        assert values == pytest.approx([0.01, 0.1, 1.0])

    @pytest.mark.parametrize("text", ["1:2", "1:2:3:lin", "a:2:3", "1:2:0", "0:1:3:log"])
    def test_bad_ranges(self, text: str) -> None:
        """Test malformed ranges."""
        with pytest.raises(ConfigError):
            parse_range(text)

    def test_dt_grid(self) -> None:
        """Test a step-duration grid."""
        grid = parse_grid("dt_us=10:30:3")
        assert grid.name == "dt_us"
        assert len(grid) == 3
        assert grid.points[1] == {"dt_us": 20.0}
        assert grid.label(grid.points[1]) == "20.0"
        assert not grid.is_gain_grid

    def test_product_grid(self) -> None:
        """Test that a and b axes form a product, a varying slowest."""
        grid = parse_grid("a=0.1:0.2:2,b=0.3:0.5:3")
        assert grid.name == "a,b"
        assert len(grid) == 6
        assert grid.points[0] == {"a": 0.1, "b": 0.3}
        assert grid.points[3] == {"a": 0.2, "b": 0.3}
        assert grid.label(grid.points[0]) == "0.1;0.3"
        assert grid.is_gain_grid

    def test_diagonal_grid(self) -> None:
        """Test that ab sets a = b."""
        grid = parse_grid("ab=0.01:1:3:log")
        assert grid.name == "ab"
        assert all(p["a"] == p["b"] for p in grid.points)
        assert grid.is_gain_grid

    @pytest.mark.parametrize(
        "text, message",
        [
            ("", "empty"),
            ("c=1:2:3", "must be one of"),
            ("a=1:2:3,a=1:2:3", "twice"),
            ("a=0.1:0.2:2", "combination"),
            ("ab=0.1:0.2:2,dt_us=1:2:2", "combination"),
        ],
    )
    def test_bad_grids(self, text: str, message: str) -> None:
        """Test rejected grid specifications."""
        with pytest.raises(ConfigError, match=message):
            parse_grid(text)


class TestPresets:
    """Test sweep presets."""

    def test_list(self) -> None:
        """Test that every preset is listed."""
        assert list_presets() == ["three_state_gain", "three_state_diagonal", "fluorescence_dt"]

    def test_presets_have_valid_grids(self) -> None:
        """Test that each preset grid parses and fits its family."""
        for name in list_presets():
            config = get_preset(name)
            config.validate()
            assert len(sweep_grid(config)) > 0

    def test_fluorescence_preset(self) -> None:
        """Test the step-duration preset."""
        config = get_preset("fluorescence_dt")
        assert config.family is ModelFamily.RATES
        assert config.bins == 4
        assert config.actions == "tau"
        assert Method.HISTOGRAM in config.methods

    def test_unknown_preset(self) -> None:
        """Test that unknown names list the available presets."""
        with pytest.raises(ConfigError, match="three_state_gain"):
            get_preset("nope")

    def test_grid_must_fit_family(self) -> None:
        """Test that grids are checked against the model family."""
        with pytest.raises(ConfigError, match="dt_us"):
            sweep_grid(RunConfig(grid="dt_us=1:2:2", family=ModelFamily.THREE_STATE))
        with pytest.raises(ConfigError, match="dt_us"):
            sweep_grid(RunConfig(grid="ab=0.1:0.2:2", family=ModelFamily.RATES))
        with pytest.raises(ConfigError, match="grid"):
            sweep_grid(RunConfig())


class TestInfidelityRatio:
    """Test the log10 gain of the optimal policy."""

    def test_values(self) -> None:
        """Test regular and degenerate ratios."""
        assert infidelity_ratio(0.1, 0.01) == pytest.approx(1.0)
        assert infidelity_ratio(0.0, 0.0) == 0.0
        assert infidelity_ratio(0.1, 0.0) == math.inf
        assert infidelity_ratio(0.0, 0.1) == -math.inf


class TestSweepEngine:
    """Test SweepEngine on small grids."""

    def _config(self, out: Path, **overrides) -> RunConfig:
        return RunConfig(
            command="sweep",
            grid="ab=0.05:0.1:2",
            steps=2,
            methods=[Method.NO_PERMS, Method.EXHAUSTIVE],
            out=str(out),
        ).with_overrides(**overrides)

    def test_rows(self, temp_output_dir: Path) -> None:
        """Test CSV rows, ratio rows and per-point files."""
        out = temp_output_dir / "sweep.csv"
        rows = SweepEngine(self._config(out)).run()
        assert rows[0] == CSV_HEADER
        # two methods plus a ratio row per point
        assert len(rows) == 1 + 2 * 3
        methods = [row[2] for row in rows[1:4]]
        assert methods == ["no-perms", "exhaustive", "log10_ratio"]
        assert rows[1][0] == "ab"
        assert rows[1][1] == "0.05"
        assert rows[1][3] == 2
        assert rows[1][4] == 3

        written = read_csv(out)
        assert len(written) == 6
        assert written[1]["method"] == "exhaustive"
        assert float(written[1]["infidelity"]) <= float(written[0]["infidelity"]) + 1e-12
        assert out.read_text().startswith("# config: ")

        point = read_json(temp_output_dir / "sweep.csv.d" / "point_0001.json")
        assert point["index"] == 1
        assert point["point"] == {"a": 0.1, "b": 0.1}
        assert set(point["reports"]) == {"no-perms", "exhaustive"}
        assert point["config"]["grid"] == "ab=0.05:0.1:2"

    def test_progress_callback(self, temp_output_dir: Path) -> None:
        """Test one progress call per grid point."""
        calls = []
        SweepEngine(
            self._config(temp_output_dir / "s.csv"),
            progress_callback=lambda i, total, msg: calls.append((i, total)),
        ).run()
        assert calls == [(1, 2), (2, 2)]

    def test_parallel_matches_sequential(self, temp_output_dir: Path) -> None:
        """Test that worker processes produce the same rows in grid order."""
        sequential = SweepEngine(self._config(temp_output_dir / "a.csv")).run()
        parallel = SweepEngine(self._config(temp_output_dir / "b.csv", workers=2)).run()
        assert parallel == sequential

    def test_without_output(self) -> None:
        """Test that rows are returned without writing files."""
        config = RunConfig(command="sweep", grid="ab=0.1:0.1:1", steps=1, methods=[Method.NO_PERMS])
        engine = SweepEngine(config)
        assert engine.point_dir is None
        rows = engine.run()
        assert len(rows) == 2

    def test_missing_grid(self) -> None:
        """Test that a sweep needs a grid."""
        with pytest.raises(ConfigError):
            SweepEngine(RunConfig(command="sweep"))
