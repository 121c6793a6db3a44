import argparse
import asyncio
import logging
import os
import sys

# Internal imports
from app.commands import (
    handle_route_commands,
    handle_run_commands,
    handle_validate_commands,
)
from app.utils import (
    EXIT_IO_ERROR,
    EXIT_VALIDATION_ERROR,
    ROUTE_COMMANDS,
    RUN_COMMANDS,
    VALIDATE_COMMANDS,
    ConfigValidationError,
    DomainError,
)

LOG_LEVEL_ENV = "NANOLOC_LOG_LEVEL"


def _float_list(value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}")


def _parse_args(argv: list[str] | None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="nanoloc-sim",
        description="Iterative localization and wake-up routing for in-body THz nanonetworks.",
    )
    parser.add_argument("--debug", action="store_true", default=False, help="Enable debug logging (default: False)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run all trials of one scenario")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--mode", choices=["approximate", "full"])
    run.add_argument("--out", default="results.csv")
    run.add_argument("--workers", type=int, help="Process pool size (default: CPU count)")
    run.add_argument("--profile", action="store_true", help="Run inline under cProfile")

    sweep = sub.add_parser("sweep", help="Sweep communication range x node density")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--ranges", type=_float_list, required=True, help="Ranges in cm, e.g. 1,2,3")
    sweep.add_argument("--densities", type=_float_list, required=True, help="Densities per cm^3, e.g. 10,100,1000")
    sweep.add_argument("--trials", type=int)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--mode", choices=["approximate", "full"])
    sweep.add_argument("--out", default="results")
    sweep.add_argument("--workers", type=int, help="Process pool size (default: CPU count)")
    sweep.add_argument("--profile", action="store_true", help="Run inline under cProfile")

    route = sub.add_parser("route", help="Route and wake a path from a localized node to the SDM")
    route.add_argument("--config", required=True)
    route.add_argument("--node", type=int, required=True)
    route.add_argument("--anchor", type=int, help="Boundary anchor index (default: nearest)")
    route.add_argument("--seed", type=int)
    route.add_argument("--trial", type=int, default=0)

    validate = sub.add_parser("validate", help="Validate a config file")
    validate.add_argument("--config", required=True)

    return parser.parse_args(argv)


def _configure_logging(debug: bool) -> None:
    # Environment variable sets verbosity; --debug always wins
    level_name = "DEBUG" if debug else os.environ.get(LOG_LEVEL_ENV, "INFO").upper()
    level = logging.getLevelNamesMapping().get(level_name, logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(message)s", force=True)
    logging.debug("Debug logging enabled")


async def main(argv: list[str] | None = None) -> int:
    """
    Entry point for all CLI commands.

    Returns the process exit code: 0 success, 1 validation error, 2 I/O error.
    """
    args = _parse_args(argv)
    _configure_logging(args.debug)

    try:
        match args.command:
            case cmd if cmd in RUN_COMMANDS:
                logging.info(f"Handling run command: {cmd}")
                return await handle_run_commands(cmd, args)

            case cmd if cmd in ROUTE_COMMANDS:
                logging.info(f"Handling route command: {cmd}")
                return await handle_route_commands(cmd, args)

            case cmd if cmd in VALIDATE_COMMANDS:
                logging.info(f"Handling validate command: {cmd}")
                return await handle_validate_commands(cmd, args)

            case _:
                logging.error(f"Unknown command: {args.command}")
                return EXIT_VALIDATION_ERROR

    except ConfigValidationError as e:
        logging.error(str(e))
        for name, reason in e.fields.items():
            print(f"invalid {name}: {reason}", file=sys.stderr)
        return EXIT_VALIDATION_ERROR
    except DomainError as e:
        logging.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION_ERROR
    except OSError as e:
        logging.error(f"I/O error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(asyncio.run(main(sys.argv[1:])))
