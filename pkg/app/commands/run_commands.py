import argparse
import logging
from pathlib import Path

# Internal imports
from app.config import ScenarioConfig, load_config
from app.format_output import emit_csv, emit_heatmap, emit_summary_csv
from app.harness import SweepResult, run_sweep
from app.utils import (
    EXIT_OK,
    InlineExecutor,
    PROFILE_FILE,
    conditional_decorator,
    profile,
)


async def handle_run_commands(command: str, args: argparse.Namespace) -> int:
    """
    Handles the run and sweep commands.

    Args:
        command (str): The command to handle.
        args (argparse.Namespace): Parsed CLI arguments.
    """
    commands_dict: dict = {
        "run": _handle_run,
        "sweep": _handle_sweep,
    }
    return await commands_dict[command](args)


def _load(args: argparse.Namespace) -> ScenarioConfig:
    return load_config(
        args.config,
        seed=args.seed,
        trials=getattr(args, "trials", None),
        mode=args.mode,
    )


async def _execute(args: argparse.Namespace, ranges: list[float], densities: list[float], config: ScenarioConfig) -> SweepResult:
    # cProfile only sees the calling thread, so profiled sweeps run inline.
    executor = InlineExecutor() if args.profile else None
    runner = conditional_decorator(profile(output_file=PROFILE_FILE), condition=args.profile)(run_sweep)
    return await runner(ranges, densities, config, workers=args.workers, executor=executor)


async def _handle_run(args: argparse.Namespace) -> int:
    """
    Handles the run command: all trials of the config's single (range, density) cell.
    """
    config = _load(args)
    logging.info(f"run: range {config.comm_range_cm} cm, density {config.density_per_cm3}/cm^3, {config.trials} trials")

    result = await _execute(args, [config.comm_range_cm], [config.density_per_cm3], config)
    emit_csv(result, Path(args.out))
    return EXIT_OK


async def _handle_sweep(args: argparse.Namespace) -> int:
    """
    Handles the sweep command: the ranges x densities grid, written as
    results.csv, summary.csv and heatmap.svg under the output directory.
    """
    config = _load(args)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create {out_dir}: {e.strerror or e}") from e

    logging.info(f"sweep: ranges {args.ranges} cm x densities {args.densities}/cm^3, {config.trials} trials")
    result = await _execute(args, args.ranges, args.densities, config)

    emit_csv(result, out_dir / "results.csv")
    emit_summary_csv(result, out_dir / "summary.csv")
    emit_heatmap(result, out_dir / "heatmap.svg")
    return EXIT_OK
