"""Sweep engine: run the readout pipeline over a parameter grid."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from adaptivereadout.core.common import CountingProgressCallback
from adaptivereadout.core.pipeline import PipelineResult, ReadoutPipeline
from adaptivereadout.core.settings import Method, RunConfig
from adaptivereadout.evaluation.report import EvalReport
from adaptivereadout.output.serialization import model_to_json, write_csv, write_json
from adaptivereadout.sweep.config import sweep_grid
from adaptivereadout.sweep.grid import GridSpec

logger = logging.getLogger(__name__)

CSV_HEADER = ["grid_param_name", "grid_value", "method", "n", "n_b", "infidelity", "stderr", "seed"]
RATIO_METHOD = "log10_ratio"


@dataclass
class PointResult:
    """Rows and reports produced at one grid point."""

    index: int
    point: Dict[str, float]
    rows: List[List[Any]]
    reports: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    processing_time: float = 0.0


def _optional(value: Optional[Any]) -> Any:
    return "" if value is None else value


def infidelity_ratio(no_perms: float, optimal: float) -> float:
    """log10(no-perms infidelity / optimal infidelity); 0 when both vanish."""
    if optimal <= 0.0:
        return 0.0 if no_perms <= 0.0 else math.inf
    if no_perms <= 0.0:
        return -math.inf
    return math.log10(no_perms / optimal)


def point_rows(grid: GridSpec, point: Dict[str, float], config: RunConfig, result: PipelineResult) -> List[List[Any]]:
    """CSV rows for one processed grid point, in method order."""
    rows: List[List[Any]] = []
    label = grid.label(point)
    for method in config.methods:
        report = result.reports[method]
        source = result.unbinned if method is Method.HISTOGRAM else result.model
        n_b = source.num_outputs if source is not None else ""
        rows.append([
            grid.name, label, method.value, report.n, n_b,
            repr(report.infidelity), _optional(report.stderr), _optional(report.seed),
        ])
    if grid.is_gain_grid and Method.NO_PERMS in result.reports and Method.EXHAUSTIVE in result.reports:
        ratio = infidelity_ratio(
            result.reports[Method.NO_PERMS].infidelity,
            result.reports[Method.EXHAUSTIVE].infidelity,
        )
        rows.append([grid.name, label, RATIO_METHOD, config.steps, result.model.num_outputs, repr(ratio), "", ""])
    return rows


def _run_point(
    config: RunConfig,
    grid: GridSpec,
    index: int,
    point_dir: Optional[Path],
) -> PointResult:
    """Process one grid point (module level so worker processes can pickle it)."""
    start = time.time()
    point = grid.points[index]
    point_config = config.with_overrides(**point)
    model = ReadoutPipeline.build_model(point_config)
    result = ReadoutPipeline.process(model, point_config)
    reports: Dict[str, EvalReport] = {m.value: r for m, r in result.reports.items()}
    outcome = PointResult(
        index=index,
        point=dict(point),
        rows=point_rows(grid, point, point_config, result),
        reports={name: r.to_json() for name, r in reports.items()},
        processing_time=time.time() - start,
    )
    if point_dir is not None:
        document: Dict[str, Any] = {
            "index": index,
            "point": outcome.point,
            "model": model_to_json(result.model),
            "reports": outcome.reports,
        }
        if result.binning is not None:
            document["partition"] = result.binning.partition.to_json()
        write_json(point_dir / f"point_{index:04d}.json", document, point_config.to_json())
    return outcome


class SweepEngine:
    """Run every grid point of a sweep configuration."""

    def __init__(
        self,
        config: RunConfig,
        progress_callback: Optional[CountingProgressCallback] = None,
    ) -> None:
        """Initialize sweep engine.

        Args:
            config: Sweep configuration (grid, methods, steps, bins, workers, out)
            progress_callback: Optional callback(current, total, message)

        Raises:
            ConfigError: If the grid is missing or malformed
        """
        self.config = config.validate()
        self.grid = sweep_grid(config)
        self.progress_callback = progress_callback
        if config.out:
            out = Path(config.out)
            self.point_dir: Optional[Path] = out.with_name(out.name + ".d")
        else:
            self.point_dir = None

    def run(self) -> List[List[Any]]:
        """Process every grid point and return the CSV rows (header first).

        Writes ``config.out`` and the per-point JSON files when an output
        path is configured. Exceptions raised at a grid point propagate.
        """
        start = time.time()
        total = len(self.grid)
        logger.info("Sweeping %d grid points over %s", total, self.grid.name)

        if self.config.workers > 1 and total > 1:
            results = self._process_parallel()
        else:
            results = self._process_sequential()
        results.sort(key=lambda r: r.index)

        rows: List[List[Any]] = [list(CSV_HEADER)]
        for result in results:
            rows.extend(result.rows)
        if self.config.out:
            write_csv(self.config.out, rows, self.config.to_json())
        logger.info("Sweep complete in %.1fs", time.time() - start)
        return rows

    def _report(self, current: int, message: str) -> None:
        if self.progress_callback:
            self.progress_callback(current, len(self.grid), message)

    def _process_sequential(self) -> List[PointResult]:
        results = []
        for i in range(len(self.grid)):
            result = _run_point(self.config, self.grid, i, self.point_dir)
            results.append(result)
            self._report(i + 1, f"Point {i} ({result.processing_time:.2f}s)")
        return results

    def _process_parallel(self) -> List[PointResult]:
        # grid points run in parallel; each pipeline runs single-threaded
        point_config = self.config.with_overrides(workers=1)
        results = []
        with ProcessPoolExecutor(max_workers=self.config.workers) as executor:
            future_to_idx = {
                executor.submit(_run_point, point_config, self.grid, i, self.point_dir): i
                for i in range(len(self.grid))
            }
            for completed, future in enumerate(as_completed(future_to_idx), 1):
                idx = future_to_idx[future]
                results.append(future.result())
                self._report(completed, f"Completed point {idx}")
        return results
