"""Tests for the command-line interface."""

from pathlib import Path

import pytest
from click.testing import CliRunner

from adaptivereadout import __version__
from adaptivereadout.cli.main import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_WORK_CAP,
    _exit_code,
    cli,
)
from adaptivereadout.core.errors import (
    ConfigError,
    ImpossibleObservationError,
    NumericError,
    WorkCapExceededError,
)
from adaptivereadout.core.settings import RunConfig
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.output.serialization import load_model, read_csv, read_json, save_model


@pytest.fixture
def runner() -> CliRunner:
    """Create Click test runner."""
    return CliRunner()


@pytest.fixture
def model_file(tmp_path: Path, runner: CliRunner) -> Path:
    """Three-state model written by the CLI."""
    path = tmp_path / "model.json"
    result = runner.invoke(
        cli, ["-q", "build", "three-state", "--a", "0.05", "--b", "0.05", "--out", str(path)]
    )
    assert result.exit_code == 0, result.output
    return path


class TestGroup:
    """Test the command group."""

    def test_version(self, runner: CliRunner) -> None:
        """Test --version."""
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_help_lists_commands(self, runner: CliRunner) -> None:
        """Test that every command appears in --help."""
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        for command in ("build", "bins", "solve", "eval", "sweep", "export-pomdp", "init-config"):
            assert command in result.output

    @pytest.mark.parametrize(
        "error, code",
        [
            (WorkCapExceededError("x", 2.0, 1.0), EXIT_WORK_CAP),
            (NumericError("nan"), EXIT_NUMERIC),
            (ImpossibleObservationError("prefix"), EXIT_NUMERIC),
            (ConfigError("bad"), EXIT_CONFIG),
            (FileNotFoundError("missing"), EXIT_CONFIG),
            (RuntimeError("boom"), 1),
        ],
    )
    def test_exit_codes(self, error: Exception, code: int) -> None:
        """Test the exception to exit status mapping."""
        assert _exit_code(error) == code


class TestBuild:
    """Test the build commands."""

    def test_three_state(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test that the model file embeds its configuration."""
        path = tmp_path / "m.json"
        result = runner.invoke(
            cli, ["build", "three-state", "--a", "0.01", "--b", "0.02", "--out", str(path)]
        )
        assert result.exit_code == 0, result.output
        assert "3 levels, 3 outputs, 3 states" in result.output
        model = load_model(path)
        assert model.num_states == 3
        config = read_json(path)["config"]
        assert config["a"] == 0.01
        assert config["command"] == "build three-state"

    def test_three_state_needs_leaks(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test that missing parameters are configuration errors."""
        result = runner.invoke(cli, ["build", "three-state", "--a", "0.01", "--out", str(tmp_path / "m.json")])
        assert result.exit_code == EXIT_CONFIG
        assert "a and b" in result.output

    def test_out_required(self, runner: CliRunner) -> None:
        """Test the usage error without --out."""
        result = runner.invoke(cli, ["build", "three-state", "--a", "0.01", "--b", "0.01"])
        assert result.exit_code == 2
        assert "--out" in result.output

    def test_rates_from_config_file(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test that a config file supplies the rate-model settings."""
        config_path = tmp_path / "run.json"
        init = runner.invoke(cli, ["-q", "init-config", "--output", str(config_path)])
        assert init.exit_code == 0, init.output
        out = tmp_path / "be9.json"
        result = runner.invoke(
            cli,
            ["-q", "build", "rates", "--config", str(config_path), "--dt-us", "20",
             "--quad-points", "4", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        model = load_model(out)
        assert model.num_physical == 8
        assert model.num_outputs == 16
        assert read_json(out)["config"]["dt_us"] == 20.0

    def test_rates_bundled_by_file_name(
        self, runner: CliRunner, tmp_path: Path, monkeypatch
    ) -> None:
        """Test that --input accepts the bundled model name with its .json suffix."""
        monkeypatch.chdir(tmp_path)
        result = runner.invoke(
            cli,
            ["-q", "build", "rates", "--input", "be9_synthetic.json", "--quad-points", "4",
             "--out", "be9.json"],
        )
        assert result.exit_code == 0, result.output
        assert load_model(tmp_path / "be9.json").num_physical == 8


class TestSolveAndEval:
    """Test solve and eval."""

    def test_solve_exhaustive(self, runner: CliRunner, model_file: Path, tmp_path: Path) -> None:
        """Test that the solved table is written with terminal decisions."""
        out = tmp_path / "policy.json"
        result = runner.invoke(
            cli, ["solve", "--model", str(model_file), "--steps", "2", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert "Optimal fidelity" in result.output
        data = read_json(out)
        assert data["kind"] == "lookup"
        assert data["config"]["steps"] == 2

    def test_solve_then_eval(self, runner: CliRunner, model_file: Path, tmp_path: Path) -> None:
        """Test exact evaluation of a solved policy."""
        policy = tmp_path / "policy.json"
        runner.invoke(
            cli, ["-q", "solve", "--model", str(model_file), "--steps", "2", "--out", str(policy)]
        )
        report = tmp_path / "report.json"
        result = runner.invoke(
            cli,
            ["-q", "eval", "--model", str(model_file), "--policy", str(policy), "--steps", "2",
             "--out", str(report)],
        )
        assert result.exit_code == 0, result.output
        assert result.output.startswith("exact infidelity")
        data = read_json(report)
        assert data["method"] == "exact"
        assert 0.0 <= data["infidelity"] <= 1.0

    def test_eval_monte_carlo(self, runner: CliRunner, model_file: Path) -> None:
        """Test that Monte Carlo output carries a standard error."""
        result = runner.invoke(
            cli,
            ["eval", "--model", str(model_file), "--method", "mc", "--steps", "2",
             "--trials", "500", "--seed", "3"],
        )
        assert result.exit_code == 0, result.output
        assert result.output.startswith("monte-carlo infidelity")
        assert "±" in result.output

    def test_solve_min_entropy(self, runner: CliRunner, model_file: Path, tmp_path: Path) -> None:
        """Test that look-ahead policies are written as descriptors."""
        out = tmp_path / "policy.json"
        result = runner.invoke(
            cli,
            ["-q", "solve", "--model", str(model_file), "--method", "min-entropy", "-g", "1",
             "--steps", "3", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert read_json(out)["kind"] == "min-entropy"

    def test_work_cap_exit_code(self, runner: CliRunner, model_file: Path, tmp_path: Path) -> None:
        """Test that exceeding the work cap exits with status 3."""
        result = runner.invoke(
            cli,
            ["solve", "--model", str(model_file), "--steps", "2", "--work-cap", "10",
             "--out", str(tmp_path / "p.json")],
        )
        assert result.exit_code == EXIT_WORK_CAP
        assert "work cap" in result.output

    def test_invalid_steps(self, runner: CliRunner, model_file: Path) -> None:
        """Test that validation failures exit with status 2."""
        result = runner.invoke(cli, ["eval", "--model", str(model_file), "--steps", "0"])
        assert result.exit_code == EXIT_CONFIG
        assert "steps must be >= 1" in result.output

    def test_missing_model_file(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test that unreadable inputs exit with status 2."""
        result = runner.invoke(cli, ["eval", "--model", str(tmp_path / "missing.json")])
        assert result.exit_code == EXIT_CONFIG


class TestBins:
    """Test the bins command."""

    def test_bins(self, runner: CliRunner, small_expanded: ExpandedHmm, tmp_path: Path) -> None:
        """Test the partition search and the binned model file."""
        model_path = tmp_path / "model.json"
        save_model(model_path, small_expanded)
        out = tmp_path / "bins.json"
        binned = tmp_path / "binned.json"
        result = runner.invoke(
            cli,
            ["bins", "--model", str(model_path), "--bins", "2", "--steps", "2",
             "--out", str(out), "--binned-model", str(binned)],
        )
        assert result.exit_code == 0, result.output
        assert "Best partition" in result.output
        data = read_json(out)
        assert len(data["candidates"]) == 4
        assert data["infidelity"] == min(c["infidelity"] for c in data["candidates"])
        assert load_model(binned).num_outputs == 2

    def test_bins_csv(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test that every candidate partition of the bundled model lands in the CSV."""
        model_path = tmp_path / "be9.json"
        build = runner.invoke(
            cli, ["-q", "build", "rates", "--quad-points", "4", "--out", str(model_path)]
        )
        assert build.exit_code == 0, build.output
        csv_path = tmp_path / "bins.csv"
        result = runner.invoke(
            cli,
            ["-q", "bins", "--model", str(model_path), "--bins", "4", "--steps", "1",
             "--out", str(tmp_path / "bins.json"), "--csv", str(csv_path)],
        )
        assert result.exit_code == 0, result.output
        assert csv_path.read_text().startswith("# config: ")
        rows = read_csv(csv_path)
        assert len(rows) == 455
        assert all(len(r["boundaries"].split()) == 3 for r in rows)
        best = read_json(tmp_path / "bins.json")["infidelity"]
        assert min(float(r["infidelity"]) for r in rows) == best

    def test_bins_required(self, runner: CliRunner) -> None:
        """Test the usage error without a model."""
        result = runner.invoke(cli, ["bins", "--bins", "2"])
        assert result.exit_code == 2


class TestSweep:
    """Test the sweep command."""

    def test_grid_sweep(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test a two-point diagonal sweep."""
        out = tmp_path / "ab.csv"
        result = runner.invoke(
            cli,
            ["sweep", "--grid", "ab=0.05:0.1:2", "--steps", "2",
             "--methods", "no-perms,exhaustive", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert "6 rows written" in result.output
        rows = read_csv(out)
        assert [r["method"] for r in rows[:3]] == ["no-perms", "exhaustive", "log10_ratio"]
        assert (tmp_path / "ab.csv.d" / "point_0000.json").exists()

    def test_rows_printed_without_out(self, runner: CliRunner) -> None:
        """Test that rows go to stdout when no file is given."""
        result = runner.invoke(
            cli, ["-q", "sweep", "--grid", "ab=0.1:0.1:1", "--steps", "1", "--methods", "no-perms"]
        )
        assert result.exit_code == 0, result.output
        lines = result.output.strip().splitlines()
        assert lines[0].startswith("grid_param_name,grid_value,method")
        assert len(lines) == 2

    def test_preset_and_config_conflict(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test that --preset and --config are exclusive."""
        config_path = tmp_path / "run.json"
        runner.invoke(cli, ["-q", "init-config", "--output", str(config_path)])
        result = runner.invoke(
            cli, ["sweep", "--preset", "three_state_gain", "--config", str(config_path)]
        )
        assert result.exit_code == 2

    def test_bad_grid(self, runner: CliRunner) -> None:
        """Test that malformed grids are configuration errors."""
        result = runner.invoke(cli, ["sweep", "--grid", "c=1:2:3"])
        assert result.exit_code == EXIT_CONFIG


class TestExportPomdp:
    """Test export-pomdp."""

    def test_export_and_verify(self, runner: CliRunner, model_file: Path, tmp_path: Path) -> None:
        """Test that the written POMDP optimum matches the Bellman fidelity."""
        out = tmp_path / "readout.pomdp"
        result = runner.invoke(
            cli,
            ["export-pomdp", "--model", str(model_file), "--steps", "2", "--out", str(out), "--verify"],
        )
        assert result.exit_code == 0, result.output
        assert "27 states and 7 actions" in result.output
        assert "POMDP optimum" in result.output
        assert out.read_text().startswith("# horizon: 2")

    def test_state_cap(self, runner: CliRunner, model_file: Path, tmp_path: Path) -> None:
        """Test that oversized exports exit with status 3."""
        result = runner.invoke(
            cli,
            ["export-pomdp", "--model", str(model_file), "--steps", "2", "--work-cap", "5",
             "--out", str(tmp_path / "x.pomdp")],
        )
        assert result.exit_code == EXIT_WORK_CAP


class TestInitConfig:
    """Test init-config."""

    def test_default_config(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test that the written file loads back as the defaults."""
        path = tmp_path / "config.json"
        result = runner.invoke(cli, ["init-config", "--output", str(path)])
        assert result.exit_code == 0, result.output
        assert "Configuration file created" in result.output
        assert RunConfig.from_json(read_json(path)) == RunConfig()

    def test_preset_config(self, runner: CliRunner, tmp_path: Path) -> None:
        """Test that presets seed the file."""
        path = tmp_path / "gain.json"
        result = runner.invoke(cli, ["-q", "init-config", "--preset", "three_state_diagonal", "--output", str(path)])
        assert result.exit_code == 0, result.output
        assert read_json(path)["grid"] == "ab=0.005:0.3:20:log"
