from .command_types import (
    RUN_COMMANDS as RUN_COMMANDS,
    ROUTE_COMMANDS as ROUTE_COMMANDS,
    VALIDATE_COMMANDS as VALIDATE_COMMANDS,
    EXIT_OK as EXIT_OK,
    EXIT_VALIDATION_ERROR as EXIT_VALIDATION_ERROR,
    EXIT_IO_ERROR as EXIT_IO_ERROR,
)

from .error_strings import (
    OUTSIDE_REGION as OUTSIDE_REGION,
    NON_POSITIVE_DISTANCE as NON_POSITIVE_DISTANCE,
    NEGATIVE_DENSITY as NEGATIVE_DENSITY,
    EMPTY_BEAM_SEQUENCE as EMPTY_BEAM_SEQUENCE,
    INVALID_BEAM as INVALID_BEAM,
    ORIGIN_NOT_ON_BOUNDARY as ORIGIN_NOT_ON_BOUNDARY,
    TOO_MANY_ONES as TOO_MANY_ONES,
    TOO_FEW_ANCHORS as TOO_FEW_ANCHORS,
    COLLINEAR_ANCHORS as COLLINEAR_ANCHORS,
    MALFORMED_ANNULUS as MALFORMED_ANNULUS,
    FRAMES_TOO_LONG as FRAMES_TOO_LONG,
    NO_ROUTE as NO_ROUTE,
    AMBIGUOUS_WAKE as AMBIGUOUS_WAKE,
    NEGATIVE_AMOUNT as NEGATIVE_AMOUNT,
    INVALID_CONFIG as INVALID_CONFIG,
)

from .errors import (
    DomainError as DomainError,
    DegenerateGeometryError as DegenerateGeometryError,
    ProtocolError as ProtocolError,
    NoRouteError as NoRouteError,
    AmbiguousWakeError as AmbiguousWakeError,
    ConfigValidationError as ConfigValidationError,
)

from .profiler import profile as profile
from .profiler import PROFILE_FILE as PROFILE_FILE
from .conditional_decorator import conditional_decorator as conditional_decorator
from .inline_executor import InlineExecutor as InlineExecutor
