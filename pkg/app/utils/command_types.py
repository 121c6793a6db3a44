from typing import Literal

# These types improve type checking by LSPs
RUN_COMMANDS: set[Literal["run", "sweep"]] = {"run", "sweep"}
ROUTE_COMMANDS: set[Literal["route"]] = {"route"}
VALIDATE_COMMANDS: set[Literal["validate"]] = {"validate"}

EXIT_OK = 0
EXIT_VALIDATION_ERROR = 1
EXIT_IO_ERROR = 2
