"""Command-line interface for the adaptive readout toolkit.

Every command accepts ``--config FILE`` (a JSON RunConfig); explicit flags
override values from the file, and the resolved configuration is embedded
in every JSON or CSV file a command writes.
"""

from __future__ import annotations

import functools
import logging
import sys
from typing import Any, Callable, Optional, TypeVar

import click
from tqdm import tqdm

from adaptivereadout import __version__
from adaptivereadout.algorithms.bellman import solve_optimal
from adaptivereadout.core.common import (
    DEFAULT_NODE_CAP,
    DEFAULT_POMDP_STATE_CAP,
    DEFAULT_SEQUENCE_CAP,
)
from adaptivereadout.core.errors import (
    ImpossibleObservationError,
    NumericError,
    ReadoutError,
    WorkCapExceededError,
)
from adaptivereadout.core.pipeline import ReadoutPipeline
from adaptivereadout.core.settings import Method, ModelFamily, RunConfig
from adaptivereadout.evaluation.exact import exact_infidelity
from adaptivereadout.evaluation.histogram import histogram_infidelity
from adaptivereadout.evaluation.simulate import simulate
from adaptivereadout.models.binning import bin_model, optimize_binning
from adaptivereadout.output.cassandra import write_cassandra
from adaptivereadout.output.pomdp import pomdp_optimal_value, to_pomdp
from adaptivereadout.output.serialization import (
    load_model,
    load_policy,
    read_json,
    save_model,
    write_csv,
    write_json,
)
from adaptivereadout.policies.base import Policy
from adaptivereadout.policies.static import StaticPolicy
from adaptivereadout.structs.permutation import ActionSet
from adaptivereadout.sweep.config import get_preset, list_presets
from adaptivereadout.sweep.engine import SweepEngine

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

EXIT_CONFIG = 2
EXIT_WORK_CAP = 3
EXIT_NUMERIC = 4
EXIT_INTERRUPTED = 130

SOLVE_METHODS = {
    "exhaustive": Method.EXHAUSTIVE,
    "min-entropy": Method.MIN_ENTROPY,
    "no-perms": Method.NO_PERMS,
    "none": Method.NO_PERMS,
}


def _exit_code(error: BaseException) -> int:
    """Map an exception to the command's exit status."""
    if isinstance(error, WorkCapExceededError):
        return EXIT_WORK_CAP
    if isinstance(error, (NumericError, ImpossibleObservationError)):
        return EXIT_NUMERIC
    if isinstance(error, (ReadoutError, ValueError, OSError)):
        return EXIT_CONFIG
    return 1


def _handle_errors(func: F) -> F:
    """Report errors on stderr and exit with the mapped status."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except KeyboardInterrupt:
            click.echo("\n\nInterrupted by user.", err=True)
            sys.exit(EXIT_INTERRUPTED)
        except (click.exceptions.Exit, click.ClickException):
            raise
        except Exception as e:
            click.echo(f"Error: {e}", err=True)
            logger.debug("command failed", exc_info=True)
            sys.exit(_exit_code(e))

    return wrapper  # type: ignore[return-value]


def _resolve_config(command: str, config_path: Optional[str], **flags: Any) -> RunConfig:
    """Config file (if any) with explicit flags applied on top, validated."""
    config = RunConfig.from_json(read_json(config_path)) if config_path else RunConfig()
    return config.with_overrides(command=command, **flags).validate()


def _counting_bar(quiet: bool, desc: str) -> Any:
    """tqdm bar and a callback(current, total, message) driving it."""
    bar = tqdm(total=0, desc=desc, disable=quiet, leave=False)

    def callback(current: int, total: int, message: str) -> None:
        bar.total = total
        bar.n = current
        bar.set_postfix_str(message, refresh=False)
        bar.refresh()

    return bar, callback


def _echo(quiet: bool, message: str) -> None:
    if not quiet:
        click.echo(message)


config_option = click.option(
    "--config", "-c", "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Path to JSON run configuration file",
)
out_option = click.option("--out", "-o", type=click.Path(), help="Output file path")
work_cap_option = click.option(
    "--work-cap", type=float, help="Cap on enumerated sequences / tree nodes / states"
)
workers_option = click.option("--workers", type=int, help="Worker processes (default: 1)")
steps_option = click.option("--steps", "-n", type=int, help="Number of measurement steps n")
actions_option = click.option(
    "--actions",
    help="Action set: identity, transpositions, transpositions+3cycles, "
    "a model permutation name, or a JSON file",
)


@click.group()
@click.version_option(__version__, prog_name="adaptivereadout")
@click.option("--verbose", "-v", count=True, help="Log INFO (-v) or DEBUG (-vv) messages")
@click.option("--quiet", "-q", is_flag=True, help="Suppress progress output")
@click.pass_context
def cli(ctx: click.Context, verbose: int, quiet: bool) -> None:
    """Adaptive permutation readout policies for hidden Markov models."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    ctx.ensure_object(dict)
    ctx.obj["quiet"] = quiet


@cli.group()
def build() -> None:
    """Build a model file."""


@build.command("three-state")
@config_option
@click.option("--a", "a", type=float, help="Leak probability of the outer states")
@click.option("--b", "b", type=float, help="Leak probability of the middle state")
@out_option
@click.pass_context
@_handle_errors
def build_three_state(
    ctx: click.Context, config_path: Optional[str], a: Optional[float], b: Optional[float], out: Optional[str]
) -> None:
    """Build the three-state model with leak probabilities A and B.

    Example:

      \b
      $ adaptivereadout build three-state --a 0.01 --b 0.01 --out model.json
    """
    config = _resolve_config(
        "build three-state", config_path, family=ModelFamily.THREE_STATE, a=a, b=b, out=out
    )
    model = ReadoutPipeline.build_model(config)
    _write_model(ctx, config, model)


@build.command("rates")
@config_option
@click.option(
    "--input", "-i", "input_path",
    help="Rate model JSON (default: the bundled synthetic model)",
)
@click.option("--dt-us", type=float, help="Step duration in microseconds")
@click.option("--quad-points", type=int, help="Quadrature nodes for photon statistics")
@out_option
@click.pass_context
@_handle_errors
def build_rates(
    ctx: click.Context,
    config_path: Optional[str],
    input_path: Optional[str],
    dt_us: Optional[float],
    quad_points: Optional[int],
    out: Optional[str],
) -> None:
    """Integrate a rate model into an expanded HMM with photon-count outputs.

    Example:

      \b
      $ adaptivereadout build rates --dt-us 53.9 --out be9.json
    """
    config = _resolve_config(
        "build rates",
        config_path,
        family=ModelFamily.RATES,
        model_path=input_path,
        dt_us=dt_us,
        quad_points=quad_points,
        out=out,
    )
    model = ReadoutPipeline.build_model(config)
    _write_model(ctx, config, model)


def _write_model(ctx: click.Context, config: RunConfig, model: Any) -> None:
    if not config.out:
        raise click.UsageError("--out is required")
    save_model(config.out, model, config.to_json())
    _echo(
        ctx.obj["quiet"],
        f"✓ Model written to {config.out} "
        f"({model.num_physical} levels, {model.num_outputs} outputs, {model.num_states} states)",
    )


@cli.command()
@config_option
@click.option("--model", "-m", "model_path", help="Unbinned model JSON")
@click.option("--bins", "-b", type=int, help="Number of bins n_b")
@steps_option
@click.option("--binned-model", type=click.Path(), help="Also write the binned model here")
@click.option(
    "--csv", "csv_path", type=click.Path(), help="Also write every candidate partition as CSV"
)
@out_option
@work_cap_option
@workers_option
@click.pass_context
@_handle_errors
def bins(
    ctx: click.Context,
    config_path: Optional[str],
    model_path: Optional[str],
    bins: Optional[int],
    steps: Optional[int],
    binned_model: Optional[str],
    csv_path: Optional[str],
    out: Optional[str],
    work_cap: Optional[float],
    workers: Optional[int],
) -> None:
    """Search the consecutive output partition with the lowest infidelity.

    Example:

      \b
      $ adaptivereadout bins --model be9.json --bins 4 --steps 6 --out bins.json --csv bins.csv
    """
    quiet = ctx.obj["quiet"]
    config = _resolve_config(
        "bins", config_path, model_path=model_path, bins=bins, steps=steps,
        out=out, work_cap=work_cap, workers=workers,
    )
    if not config.model_path or config.bins is None or not config.out:
        raise click.UsageError("--model, --bins and --out are required")
    model = load_model(config.model_path)
    bar, callback = _counting_bar(quiet, "Partitions")
    with bar:
        result = optimize_binning(
            model,
            config.bins,
            config.steps,
            work_cap=config.work_cap or DEFAULT_SEQUENCE_CAP,
            workers=config.workers,
            progress_callback=callback,
        )
    binned = bin_model(model, result.partition)
    write_json(
        config.out,
        {
            "partition": result.partition.to_json(),
            "label": result.partition.label(),
            "infidelity": result.infidelity,
            "n": config.steps,
            "candidates": [
                {"boundaries": list(p.boundaries), "infidelity": v} for p, v in result.candidates
            ],
        },
        config.to_json(),
    )
    if csv_path:
        write_csv(csv_path, result.csv_rows(), config.to_json())
    if binned_model:
        save_model(binned_model, binned, config.to_json())
    _echo(quiet, f"✓ Best partition {result.partition.label()}: infidelity {result.infidelity!r}")


@cli.command()
@config_option
@click.option("--model", "-m", "model_path", help="Model JSON")
@click.option(
    "--method",
    type=click.Choice(sorted(SOLVE_METHODS)),
    default="exhaustive",
    show_default=True,
    help="Policy to build",
)
@actions_option
@steps_option
@click.option("--lookahead", "-g", type=int, help="Look-ahead depth for min-entropy")
@out_option
@work_cap_option
@workers_option
@click.pass_context
@_handle_errors
def solve(
    ctx: click.Context,
    config_path: Optional[str],
    model_path: Optional[str],
    method: str,
    actions: Optional[str],
    steps: Optional[int],
    lookahead: Optional[int],
    out: Optional[str],
    work_cap: Optional[float],
    workers: Optional[int],
) -> None:
    """Build a readout policy and write it as JSON.

    Example:

      \b
      $ adaptivereadout solve --model model.json --method exhaustive --steps 6 --out policy.json
    """
    quiet = ctx.obj["quiet"]
    config = _resolve_config(
        "solve", config_path, model_path=model_path, methods=[SOLVE_METHODS[method]],
        actions=actions, steps=steps, lookahead=lookahead, out=out,
        work_cap=work_cap, workers=workers,
    )
    if not config.model_path or not config.out:
        raise click.UsageError("--model and --out are required")
    model = load_model(config.model_path)
    action_set = ActionSet.from_spec(config.actions, model)
    chosen = config.methods[0]
    policy: Policy
    if chosen is Method.EXHAUSTIVE:
        bar, callback = _counting_bar(quiet, "Branches")
        with bar:
            lookup, fidelity = solve_optimal(
                model,
                action_set,
                config.steps,
                work_cap=config.work_cap or DEFAULT_NODE_CAP,
                workers=config.workers,
                progress_callback=callback,
            )
        policy = lookup.with_decisions(model)
        _echo(quiet, f"Optimal fidelity {fidelity!r} (infidelity {1.0 - fidelity!r})")
    else:
        policy = ReadoutPipeline.make_policy(
            chosen, model, action_set, config.steps, config.lookahead,
            config.work_cap or DEFAULT_NODE_CAP, config.workers,
        )
    write_json(config.out, policy.to_json(), config.to_json())
    _echo(quiet, f"✓ Policy {policy.name} written to {config.out}")


@cli.command("eval")
@config_option
@click.option("--model", "-m", "model_path", help="Model JSON")
@click.option("--policy", "-p", "policy_path", help="Policy JSON (default: no permutations)")
@click.option(
    "--method",
    type=click.Choice(["exact", "mc", "histogram"]),
    help="Evaluator (default: exact)",
)
@steps_option
@click.option("--trials", type=int, help="Monte Carlo trajectories")
@click.option("--seed", type=int, help="Monte Carlo seed")
@out_option
@work_cap_option
@workers_option
@click.pass_context
@_handle_errors
def eval_cmd(
    ctx: click.Context,
    config_path: Optional[str],
    model_path: Optional[str],
    policy_path: Optional[str],
    method: Optional[str],
    steps: Optional[int],
    trials: Optional[int],
    seed: Optional[int],
    out: Optional[str],
    work_cap: Optional[float],
    workers: Optional[int],
) -> None:
    """Measure the infidelity of a policy (or of the histogram method).

    Example:

      \b
      $ adaptivereadout eval --model model.json --policy policy.json --method mc --trials 100000
    """
    quiet = ctx.obj["quiet"]
    config = _resolve_config(
        "eval", config_path, model_path=model_path, policy_path=policy_path,
        evaluator=method, steps=steps, trials=trials, seed=seed, out=out,
        work_cap=work_cap, workers=workers,
    )
    if not config.model_path:
        raise click.UsageError("--model is required")
    model = load_model(config.model_path)
    if config.evaluator == "histogram":
        report = histogram_infidelity(model, config.steps)
    else:
        policy = (
            load_policy(config.policy_path, model)
            if config.policy_path
            else StaticPolicy.no_permutations(model.num_physical)
        )
        if config.evaluator == "mc":
            report = simulate(model, policy, config.steps, config.trials, config.seed)
        else:
            report = exact_infidelity(
                model, policy, config.steps,
                work_cap=config.work_cap or DEFAULT_SEQUENCE_CAP, workers=config.workers,
            )
    if config.out:
        write_json(config.out, report.to_json(), config.to_json())
    line = f"{report.method.value} infidelity {report.infidelity!r}"
    if report.stderr is not None:
        line += f" ± {report.stderr!r}"
    click.echo(line)


@cli.command()
@config_option
@click.option("--preset", type=click.Choice(list_presets()), help="Start from a preset")
@click.option("--grid", help="Grid, e.g. dt_us=10:200:20 or a=0.005:0.3:10:log,b=0.005:0.3:10:log")
@click.option("--family", type=click.Choice([f.value for f in ModelFamily]), help="Model family")
@click.option("--model", "-m", "model_path", help="Rate model JSON for rate sweeps")
@click.option("--methods", help="Comma-separated methods (histogram,no-perms,min-entropy,exhaustive)")
@steps_option
@click.option("--bins", "-b", type=int, help="Number of bins n_b")
@click.option("--lookahead", "-g", type=int, help="Look-ahead depth for min-entropy")
@actions_option
@out_option
@work_cap_option
@workers_option
@click.pass_context
@_handle_errors
def sweep(
    ctx: click.Context,
    config_path: Optional[str],
    preset: Optional[str],
    grid: Optional[str],
    family: Optional[str],
    model_path: Optional[str],
    methods: Optional[str],
    steps: Optional[int],
    bins: Optional[int],
    lookahead: Optional[int],
    actions: Optional[str],
    out: Optional[str],
    work_cap: Optional[float],
    workers: Optional[int],
) -> None:
    """Evaluate readout methods over a grid of model parameters.

    Writes a CSV with one row per grid point and method, and one JSON file
    per grid point (with the built model) into ``<out>.d/``.

    Examples:

      \b
      $ adaptivereadout sweep --preset fluorescence_dt --out dt.csv
      $ adaptivereadout sweep --grid ab=0.005:0.3:20:log --steps 2 --out ab.csv
    """
    quiet = ctx.obj["quiet"]
    if preset and config_path:
        raise click.UsageError("use either --preset or --config")
    base = get_preset(preset) if preset else None
    if base is not None:
        config = base.with_overrides(
            grid=grid, family=family, model_path=model_path, methods=methods, steps=steps,
            bins=bins, lookahead=lookahead, actions=actions, out=out,
            work_cap=work_cap, workers=workers,
        ).validate()
    else:
        config = _resolve_config(
            "sweep", config_path, grid=grid, family=family, model_path=model_path,
            methods=methods, steps=steps, bins=bins, lookahead=lookahead, actions=actions,
            out=out, work_cap=work_cap, workers=workers,
        )
    bar, callback = _counting_bar(quiet, "Grid points")
    with bar:
        engine = SweepEngine(config, progress_callback=callback)
        rows = engine.run()
    if config.out:
        _echo(quiet, f"✓ {len(rows) - 1} rows written to {config.out}")
    else:
        for row in rows:
            click.echo(",".join(str(v) for v in row))


@cli.command("export-pomdp")
@config_option
@click.option("--model", "-m", "model_path", help="Model JSON")
@actions_option
@steps_option
@out_option
@work_cap_option
@click.option(
    "--verify", is_flag=True,
    help="Check the POMDP optimum against the Bellman solver",
)
@click.pass_context
@_handle_errors
def export_pomdp(
    ctx: click.Context,
    config_path: Optional[str],
    model_path: Optional[str],
    actions: Optional[str],
    steps: Optional[int],
    out: Optional[str],
    work_cap: Optional[float],
    verify: bool,
) -> None:
    """Write the readout problem as a finite-horizon POMDP (.pomdp format).

    Example:

      \b
      $ adaptivereadout export-pomdp --model model.json --steps 3 --out readout.pomdp
    """
    quiet = ctx.obj["quiet"]
    config = _resolve_config(
        "export-pomdp", config_path, model_path=model_path, actions=actions,
        steps=steps, out=out, work_cap=work_cap,
    )
    if not config.model_path or not config.out:
        raise click.UsageError("--model and --out are required")
    model = load_model(config.model_path)
    action_set = ActionSet.from_spec(config.actions, model)
    pomdp = to_pomdp(model, action_set, config.steps, config.work_cap or DEFAULT_POMDP_STATE_CAP)
    write_cassandra(pomdp, config.out)
    _echo(
        quiet,
        f"✓ POMDP with {pomdp.num_states} states and {len(pomdp.actions)} actions "
        f"written to {config.out}",
    )
    if verify:
        value = pomdp_optimal_value(pomdp, pomdp.epochs)
        _, fidelity = solve_optimal(
            model, action_set, config.steps, work_cap=config.work_cap or DEFAULT_NODE_CAP
        )
        click.echo(f"POMDP optimum {value!r}, Bellman fidelity {fidelity!r}")
        if abs(value - fidelity) > 1e-10:
            raise NumericError(f"POMDP optimum differs from the Bellman fidelity by {abs(value - fidelity):.3g}")


@cli.command("init-config")
@click.option(
    "--output", "-o",
    type=click.Path(),
    default="run_config.json",
    show_default=True,
    help="Output file path",
)
@click.option("--preset", type=click.Choice(list_presets()), help="Base configuration on a preset")
@click.pass_context
@_handle_errors
def init_config(ctx: click.Context, output: str, preset: Optional[str]) -> None:
    """Create a configuration file with every setting.

    Example:

      \b
      $ adaptivereadout init-config --preset three_state_gain --output gain.json
      $ adaptivereadout sweep --config gain.json --out gain.csv
    """
    config = get_preset(preset) if preset else RunConfig()
    write_json(output, config.to_json())
    _echo(ctx.obj["quiet"], f"✓ Configuration file created: {output}")


if __name__ == "__main__":
    cli()
