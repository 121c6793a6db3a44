from .run_commands import handle_run_commands as handle_run_commands
from .route_commands import handle_route_commands as handle_route_commands
from .validate_commands import handle_validate_commands as handle_validate_commands
