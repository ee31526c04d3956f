"""Readout pipeline: build a model, bin it, solve policies and evaluate them.

This module orchestrates the steps a single sweep grid point (or a one-off
CLI run) goes through.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Optional, Union

from adaptivereadout.algorithms.bellman import solve_optimal
from adaptivereadout.core.common import (
    DEFAULT_NODE_CAP,
    DEFAULT_SEQUENCE_CAP,
    ProgressCallback,
)
from adaptivereadout.core.errors import ConfigError
from adaptivereadout.core.settings import Method, ModelFamily, RunConfig
from adaptivereadout.core.types import ExpandedHmm
from adaptivereadout.evaluation.exact import exact_infidelity
from adaptivereadout.evaluation.histogram import histogram_infidelity
from adaptivereadout.evaluation.report import EvalReport
from adaptivereadout.models.binning import BinningResult, bin_model, optimize_binning
from adaptivereadout.models.expansion import expand_rate_model
from adaptivereadout.models.fluorescence import RateModel
from adaptivereadout.models.three_state import three_state_expanded
from adaptivereadout.output.serialization import read_json
from adaptivereadout.policies.base import Policy
from adaptivereadout.policies.min_entropy import MinEntropyPolicy
from adaptivereadout.policies.static import StaticPolicy
from adaptivereadout.structs.permutation import ActionSet

logger = logging.getLogger(__name__)

BUNDLED_RATE_MODEL = "be9_synthetic"


def _names_bundled_model(path: Union[str, Path]) -> bool:
    if Path(path).exists():
        return False
    return str(path).removesuffix(".json") == BUNDLED_RATE_MODEL


def load_rate_model(path: Optional[Union[str, Path]] = None) -> RateModel:
    """Load a rate model file, or the bundled synthetic model when ``path`` is None
    or names it (with or without ``.json``) and no such file exists."""
    if path is None or _names_bundled_model(path):
        ref = resources.files("adaptivereadout.data") / f"{BUNDLED_RATE_MODEL}.json"
        with resources.as_file(ref) as bundled:
            return RateModel.from_json(read_json(bundled))
    return RateModel.from_json(read_json(path))


@dataclass
class PipelineResult:
    """Result of running the pipeline on one model."""
    model: ExpandedHmm
    reports: Dict[Method, EvalReport] = field(default_factory=dict)
    binning: Optional[BinningResult] = None
    unbinned: Optional[ExpandedHmm] = None


class ReadoutPipeline:
    """Model construction and method evaluation for one configuration."""

    @staticmethod
    def build_model(config: RunConfig) -> ExpandedHmm:
        """Build the unbinned model described by ``config``.

        Raises:
            ConfigError: If required parameters are missing
        """
        if config.family is ModelFamily.THREE_STATE:
            if config.a is None or config.b is None:
                raise ConfigError("three-state models need both a and b")
            return three_state_expanded(config.a, config.b)
        rates = load_rate_model(config.model_path)
        if config.dt_us is not None:
            rates = rates.with_dt(config.dt_us * 1e-6)
        return expand_rate_model(rates, config.quad_points)

    @staticmethod
    def make_policy(
        method: Method,
        model: ExpandedHmm,
        actions: ActionSet,
        n: int,
        lookahead: int = 2,
        work_cap: float = DEFAULT_NODE_CAP,
        workers: int = 1,
    ) -> Policy:
        """Policy implementing ``method`` on ``model``."""
        if method is Method.NO_PERMS:
            return StaticPolicy.no_permutations(model.num_physical)
        if method is Method.MIN_ENTROPY:
            return MinEntropyPolicy(model, actions, lookahead, work_cap)
        if method is Method.EXHAUSTIVE:
            policy, _ = solve_optimal(model, actions, n, work_cap=work_cap, workers=workers)
            return policy
        raise ConfigError(f"method '{method.value}' has no policy")

    @staticmethod
    def process(
        model: ExpandedHmm,
        config: RunConfig,
        progress_callback: Optional[ProgressCallback] = None,
    ) -> PipelineResult:
        """Bin (if requested) and evaluate every configured method exactly.

        The histogram method always runs on the unbinned model; the other
        methods run on the model binned with the partition minimizing the
        no-permutation infidelity at ``config.steps``.

        Args:
            model: Unbinned model
            config: Run configuration (steps, bins, methods, actions, caps)
            progress_callback: Optional callback(stage_name, progress)
        """
        def update(stage: str, progress: float) -> None:
            if progress_callback:
                progress_callback(stage, progress)

        n = config.steps
        sequence_cap = config.work_cap or DEFAULT_SEQUENCE_CAP
        node_cap = config.work_cap or DEFAULT_NODE_CAP
        result = PipelineResult(model=model, unbinned=model)

        working = model
        if config.bins is not None and model.rho is not None and config.bins < model.num_outputs:
            update("Binning", 0.0)
            result.binning = optimize_binning(
                model, config.bins, n, work_cap=sequence_cap, workers=config.workers
            )
            working = bin_model(model, result.binning.partition)
            update("Binning", 1.0)
        result.model = working

        actions = ActionSet.from_spec(config.actions, working)
        for i, method in enumerate(config.methods):
            update(method.value, i / len(config.methods))
            if method is Method.HISTOGRAM:
                report = histogram_infidelity(model, n)
            else:
                policy = ReadoutPipeline.make_policy(
                    method, working, actions, n, config.lookahead, node_cap, config.workers
                )
                report = exact_infidelity(working, policy, n, work_cap=sequence_cap)
            result.reports[method] = report
            logger.info("%s: infidelity %.6g at n=%d", method.value, report.infidelity, n)
        update("Done", 1.0)
        return result
