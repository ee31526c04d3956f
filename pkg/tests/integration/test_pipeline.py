"""Integration tests for the complete readout pipeline."""

import math
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from adaptivereadout.algorithms.bellman import solve_optimal
from adaptivereadout.cli.main import cli
from adaptivereadout.core.errors import ConfigError
from adaptivereadout.core.pipeline import ReadoutPipeline, load_rate_model
from adaptivereadout.core.settings import Method, ModelFamily, RunConfig
from adaptivereadout.evaluation.exact import exact_infidelity
from adaptivereadout.evaluation.simulate import simulate
from adaptivereadout.models.binning import optimize_binning
from adaptivereadout.models.expansion import expand_rate_model
from adaptivereadout.models.three_state import three_state_expanded
from adaptivereadout.output.cassandra import read_cassandra, write_cassandra
from adaptivereadout.output.pomdp import pomdp_optimal_value, to_pomdp
from adaptivereadout.output.serialization import load_model, load_policy, read_csv, read_json
from adaptivereadout.policies.min_entropy import MinEntropyPolicy
from adaptivereadout.policies.static import StaticPolicy, all_static_policies
from adaptivereadout.structs.permutation import ActionSet


@pytest.fixture
def three_state_config() -> RunConfig:
    """Small three-state configuration."""
    return RunConfig(
        family=ModelFamily.THREE_STATE,
        a=0.05,
        b=0.05,
        steps=3,
        methods=[Method.NO_PERMS, Method.MIN_ENTROPY, Method.EXHAUSTIVE],
    )


@pytest.fixture
def rates_config() -> RunConfig:
    """Short-step fluorescence configuration with two bins."""
    return RunConfig(
        family=ModelFamily.RATES,
        dt_us=20.0,
        quad_points=4,
        steps=2,
        bins=2,
        actions="tau",
        methods=[Method.HISTOGRAM, Method.NO_PERMS, Method.EXHAUSTIVE],
    )


@pytest.mark.integration
class TestPipelineIntegration:
    """Integration tests for ReadoutPipeline."""

    def test_three_state(self, three_state_config: RunConfig) -> None:
        """Test method ordering on the three-state model."""
        model = ReadoutPipeline.build_model(three_state_config)
        stages = []
        result = ReadoutPipeline.process(
            model, three_state_config, progress_callback=lambda s, p: stages.append(s)
        )
        assert result.binning is None
        reports = result.reports
        assert set(reports) == set(three_state_config.methods)
        optimal = reports[Method.EXHAUSTIVE].infidelity
        assert optimal <= reports[Method.NO_PERMS].infidelity + 1e-12
        assert optimal <= reports[Method.MIN_ENTROPY].infidelity + 1e-12
        assert stages[-1] == "Done"

    def test_rates_with_bins(self, rates_config: RunConfig) -> None:
        """Test binning and the histogram baseline on the bundled model."""
        model = ReadoutPipeline.build_model(rates_config)
        assert model.num_physical == 8
        result = ReadoutPipeline.process(model, rates_config)
        assert result.binning is not None
        assert result.model.num_outputs == 2
        assert result.unbinned is model
        for report in result.reports.values():
            assert 0.0 <= report.infidelity <= 1.0
        # optimal permutations never lose to doing nothing on the same binned model
        assert (
            result.reports[Method.EXHAUSTIVE].infidelity
            <= result.reports[Method.NO_PERMS].infidelity + 1e-12
        )

    def test_missing_parameters(self) -> None:
        """Test that three-state builds need a and b."""
        with pytest.raises(ConfigError):
            ReadoutPipeline.build_model(RunConfig(a=0.1))

    def test_bundled_rate_model_by_name(self) -> None:
        """Test that the bundled model can be named explicitly."""
        assert load_rate_model("be9_synthetic").num_states == load_rate_model().num_states == 8


@pytest.mark.integration
class TestDominance:
    """Test that the optimal adaptive policy beats every static sequence."""

    @pytest.mark.parametrize("ab", [0.02, 0.1, 0.3])
    def test_small_grid(self, ab: float) -> None:
        """Test dominance along the a = b diagonal for n = 2."""
        model = three_state_expanded(ab, ab)
        actions = ActionSet.transpositions(3)
        _, fidelity = solve_optimal(model, actions, 2)
        for policy in all_static_policies(actions, 2):
            static = exact_infidelity(model, policy, 2).infidelity
            assert 1.0 - fidelity <= static + 1e-12

    @pytest.mark.slow
    def test_full_grid(self) -> None:
        """Test dominance over a log-spaced (a, b) grid for n = 3."""
        actions = ActionSet.transpositions(3)
        statics = list(all_static_policies(actions, 3))
        for a in np.logspace(-2.3, -0.5, 5):
            for b in np.logspace(-2.3, -0.5, 5):
                model = three_state_expanded(float(a), float(b))
                _, fidelity = solve_optimal(model, actions, 3)
                best_static = min(exact_infidelity(model, p, 3).infidelity for p in statics)
                assert 1.0 - fidelity <= best_static + 1e-12

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_gain_grid(self, n: int) -> None:
        """Test the optimal policy against no permutations and look-ahead on the gain grid."""
        actions = ActionSet.transpositions(3)
        values = np.geomspace(0.005, 0.3, 10)
        ratios = np.zeros((10, 10))
        for i, a in enumerate(values):
            for j, b in enumerate(values):
                model = three_state_expanded(float(a), float(b))
                _, fidelity = solve_optimal(model, actions, n)
                optimal = 1.0 - fidelity
                none = exact_infidelity(model, StaticPolicy.no_permutations(3), n).infidelity
                greedy = exact_infidelity(model, MinEntropyPolicy(model, actions, 2), n).infidelity
                assert optimal <= none + 1e-10
                assert optimal <= greedy + 1e-10
                ratios[i, j] = none / optimal
        assert np.all(ratios >= 1.0 - 1e-9)
        assert ratios[0, 0] > 1.0


@pytest.mark.integration
class TestPomdpEquivalence:
    """Test the POMDP export against the Bellman solver."""

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_three_state(self, n: int, tmp_path: Path) -> None:
        """Test that the exported file's optimum is the optimal fidelity."""
        model = three_state_expanded(0.08, 0.03)
        actions = ActionSet.transpositions(3)
        path = tmp_path / "readout.pomdp"
        write_cassandra(to_pomdp(model, actions, n), path)
        pomdp = read_cassandra(path)
        _, fidelity = solve_optimal(model, actions, n)
        assert pomdp_optimal_value(pomdp, pomdp.epochs) == pytest.approx(fidelity, abs=1e-10)


@pytest.mark.integration
class TestMonteCarloConsistency:
    """Test simulation against exact evaluation."""

    def test_static_policy(self) -> None:
        """Test that simulated infidelity agrees with the exact value."""
        model = three_state_expanded(0.1, 0.05)
        policy = StaticPolicy.no_permutations(3)
        exact = exact_infidelity(model, policy, 4).infidelity
        report = simulate(model, policy, 4, 20000, seed=99)
        sigma = math.sqrt(exact * (1 - exact) / 20000)
        assert abs(report.infidelity - exact) <= 4.5 * sigma

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(10))
    def test_random_pairs(self, seed: int, random_model) -> None:
        """Test 10^5 simulated readouts of random models and policies against exact values."""
        model = random_model(seed=seed, num_states=3, num_outputs=2 + seed % 3)
        actions = ActionSet.transpositions(3)
        n = 3 + seed % 2
        policy = [
            StaticPolicy.no_permutations(3),
            list(all_static_policies(actions, n))[seed % 4],
            solve_optimal(model, actions, n)[0],
            MinEntropyPolicy(model, actions, 1 + seed % 2),
        ][seed % 4]
        exact = exact_infidelity(model, policy, n).infidelity
        trials = 100_000
        report = simulate(model, policy, n, trials, seed=1000 + seed)
        sigma = math.sqrt(exact * (1 - exact) / trials)
        assert abs(report.infidelity - exact) <= 4 * sigma


@pytest.mark.integration
class TestSaturation:
    """Test that six steps capture almost all of the attainable fidelity."""

    @pytest.mark.slow
    def test_diagonal(self) -> None:
        """Test the relative change from six to seven steps along a = b."""
        actions = ActionSet.transpositions(3)
        for ab in np.geomspace(0.005, 0.3, 20):
            model = three_state_expanded(float(ab), float(ab))
            none = StaticPolicy.no_permutations(3)
            pairs = [
                (exact_infidelity(model, none, n).infidelity for n in (6, 7)),
                (1.0 - solve_optimal(model, actions, n)[1] for n in (6, 7)),
            ]
            for six, seven in pairs:
                assert abs(six - seven) < 1e-2 * six


@pytest.mark.integration
@pytest.mark.slow
class TestFluorescenceReadout:
    """Test the method ordering on the bundled fluorescence model."""

    def test_short_step(self) -> None:
        """Test that at 10 us the count histogram is as good as the full record."""
        config = RunConfig(
            family=ModelFamily.RATES,
            dt_us=10.0,
            steps=6,
            bins=4,
            actions="tau",
            methods=[Method.HISTOGRAM, Method.NO_PERMS, Method.MIN_ENTROPY, Method.EXHAUSTIVE],
        )
        result = ReadoutPipeline.process(ReadoutPipeline.build_model(config), config)
        reports = {method: report.infidelity for method, report in result.reports.items()}
        assert reports[Method.HISTOGRAM] == pytest.approx(reports[Method.NO_PERMS], abs=1e-6)
        assert reports[Method.HISTOGRAM] == pytest.approx(0.044971, abs=5e-6)
        assert reports[Method.EXHAUSTIVE] == pytest.approx(0.03854, abs=5e-5)
        assert reports[Method.MIN_ENTROPY] == pytest.approx(0.03865, abs=5e-5)
        for value in reports.values():
            assert reports[Method.EXHAUSTIVE] <= value + 1e-12

    def test_bundled_partition(self) -> None:
        """Test the best four-bin partition of the bundled model for six steps."""
        model = expand_rate_model(load_rate_model())
        result = optimize_binning(model, 4, 6)
        assert len(result.candidates) == 455
        assert result.partition.label() == "0;1;2-3;4-15"


@pytest.mark.integration
class TestCliEndToEnd:
    """Build, solve, evaluate and sweep through the CLI."""

    def test_build_solve_eval(self, tmp_path: Path) -> None:
        """Test that the evaluated infidelity matches the solver's fidelity."""
        runner = CliRunner()
        model = tmp_path / "model.json"
        policy = tmp_path / "policy.json"
        report = tmp_path / "report.json"
        steps = [
            ["-q", "build", "three-state", "--a", "0.05", "--b", "0.02", "--out", str(model)],
            ["-q", "solve", "--model", str(model), "--steps", "3", "--out", str(policy)],
            ["-q", "eval", "--model", str(model), "--policy", str(policy), "--steps", "3",
             "--out", str(report)],
        ]
        for args in steps:
            result = runner.invoke(cli, args)
            assert result.exit_code == 0, result.output

        loaded = load_model(model)
        _, fidelity = solve_optimal(loaded, ActionSet.transpositions(3), 3)
        assert read_json(report)["infidelity"] == pytest.approx(1.0 - fidelity, abs=1e-12)
        assert load_policy(policy).decisions is not None

    def test_sweep_from_init_config(self, tmp_path: Path) -> None:
        """Test a sweep driven by a config file with flag overrides."""
        runner = CliRunner()
        config = tmp_path / "run.json"
        out = tmp_path / "diag.csv"
        assert runner.invoke(cli, ["-q", "init-config", "--preset", "three_state_diagonal",
                                   "--output", str(config)]).exit_code == 0
        result = runner.invoke(
            cli,
            ["-q", "sweep", "--config", str(config), "--grid", "ab=0.05:0.2:2", "--steps", "2",
             "--methods", "no-perms,exhaustive", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        rows = read_csv(out)
        ratios = [float(r["infidelity"]) for r in rows if r["method"] == "log10_ratio"]
        assert len(ratios) == 2
        assert all(r >= -1e-9 for r in ratios)
