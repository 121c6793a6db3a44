import asyncio
import logging
import math
import statistics
from collections import defaultdict
from collections.abc import Sequence
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

# Internal imports
from app.config import ScenarioConfig, build_config
from app.localization import IterationStats, run_localization
from app.utils import DomainError

CellKey = tuple[float, float]  # (range_cm, density_per_cm3)
TrialKey = tuple[float, float, int]  # (range_cm, density_per_cm3, trial)


class SweepRow(NamedTuple):
    trial: int
    range_cm: float
    density_per_cm3: float
    iteration: int
    newly_localized: int
    cumulative_coverage: float
    mean_err_mm: float
    rmse_mm: float
    bound_linear_mm: float
    bound_variance_mm: float


class SummaryRow(NamedTuple):
    range_cm: float
    density_per_cm3: float
    trials: int
    median_iterations: float
    mean_iterations: float
    max_iterations: int
    bound_linear_at_max_mm: float


@dataclass
class SweepResult:
    """
    Per-iteration rows plus the terminal iteration of every trial.

    Trials with an empty node set contribute no rows but still count, with a
    terminal iteration of 0.
    """
    sigma_mm: float
    rows: list[SweepRow] = field(default_factory=list)
    terminal_iterations: dict[TrialKey, int] = field(default_factory=dict)


def trial_seed(seed: int, trial_index: int) -> int:
    return seed ^ trial_index


def terminal_iteration(trace: Sequence[IterationStats]) -> int:
    """
    Last iteration that localized anyone, 0 if none did.
    """
    return max((s.iteration for s in trace if s.newly_localized > 0), default=0)


def run_trial(config: ScenarioConfig, trial_index: int) -> list[IterationStats]:
    """
    One seeded localization run.

    Raises:
        ConfigValidationError: config fails validation.
    """
    config = build_config(config.model_dump())
    rng = np.random.default_rng(trial_seed(config.seed, trial_index))
    trace = run_localization(config, rng)
    logging.info(
        f"Trial {trial_index} (range {config.comm_range_cm} cm, density {config.density_per_cm3}/cm^3): "
        f"{terminal_iteration(trace)} iterations"
    )
    return trace


def trace_rows(key: TrialKey, trace: Sequence[IterationStats], sigma_mm: float) -> list[SweepRow]:
    range_cm, density, trial = key
    return [
        SweepRow(
            trial=trial,
            range_cm=range_cm,
            density_per_cm3=density,
            iteration=s.iteration,
            newly_localized=s.newly_localized,
            cumulative_coverage=s.cumulative_coverage,
            mean_err_mm=s.mean_error,
            rmse_mm=s.rmse,
            bound_linear_mm=s.iteration * sigma_mm,
            bound_variance_mm=math.sqrt(s.iteration) * sigma_mm,
        )
        for s in trace
    ]


def collect(sigma_mm: float, traces: dict[TrialKey, list[IterationStats]]) -> SweepResult:
    """
    Deterministic fold: rows come out ordered by (range, density, trial, iteration)
    whatever order the trials finished in.
    """
    result = SweepResult(sigma_mm)
    for key in sorted(traces):
        result.rows.extend(trace_rows(key, traces[key], sigma_mm))
        result.terminal_iterations[key] = terminal_iteration(traces[key])
    return result


async def run_sweep(
    ranges: Sequence[float],
    densities: Sequence[float],
    base: ScenarioConfig,
    workers: int | None = None,
    executor: Executor | None = None,
) -> SweepResult:
    """
    Run every (range, density) cell for base.trials trials, concurrently.

    Args:
        ranges (Sequence[float]): Communication ranges in cm.
        densities (Sequence[float]): Node densities per cm^3.
        base (ScenarioConfig): Everything else.
        workers (int | None): Process pool size when no executor is given.
        executor (Executor | None): Externally managed executor.
    """
    if not ranges or not densities:
        raise DomainError("sweep grid needs at least one range and one density")

    cells = [
        (r, d, base.with_overrides(comm_range_cm=r, density_per_cm3=d))
        for r in sorted(set(ranges))
        for d in sorted(set(densities))
    ]
    logging.info(f"Sweeping {len(cells)} cells x {base.trials} trials")

    loop = asyncio.get_running_loop()
    own_executor = executor is None
    pool = ProcessPoolExecutor(max_workers=workers) if executor is None else executor
    try:
        keys: list[TrialKey] = [(r, d, t) for r, d, _ in cells for t in range(base.trials)]
        configs = {(r, d): cfg for r, d, cfg in cells}
        traces = await asyncio.gather(
            *(loop.run_in_executor(pool, run_trial, configs[(r, d)], t) for r, d, t in keys)
        )
    finally:
        if own_executor:
            pool.shutdown()

    return collect(base.sigma_mm, dict(zip(keys, traces)))


def cell_terminals(result: SweepResult) -> dict[CellKey, list[int]]:
    per_cell: dict[CellKey, list[int]] = defaultdict(list)
    for (r, d, _), n in sorted(result.terminal_iterations.items()):
        per_cell[(r, d)].append(n)
    return dict(per_cell)


def heatmap_cells(result: SweepResult) -> dict[CellKey, float]:
    """
    Median terminal iteration count per (range, density) cell.
    """
    return {cell: float(statistics.median(ns)) for cell, ns in cell_terminals(result).items()}


def summarize(result: SweepResult) -> list[SummaryRow]:
    return [
        SummaryRow(
            range_cm=r,
            density_per_cm3=d,
            trials=len(ns),
            median_iterations=float(statistics.median(ns)),
            mean_iterations=float(statistics.fmean(ns)),
            max_iterations=max(ns),
            bound_linear_at_max_mm=max(ns) * result.sigma_mm,
        )
        for (r, d), ns in cell_terminals(result).items()
    ]
