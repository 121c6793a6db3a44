from .error_strings import (
    AMBIGUOUS_WAKE,
    COLLINEAR_ANCHORS,
    INVALID_CONFIG,
    NO_ROUTE,
)


class DomainError(ValueError):
    """Raised when an operation's precondition is violated."""


class DegenerateGeometryError(ValueError):
    def __init__(self, message: str = COLLINEAR_ANCHORS):
        super().__init__(message)


class ProtocolError(ValueError):
    pass


class NoRouteError(LookupError):
    def __init__(self, src: int, dst: int):
        super().__init__(f"{NO_ROUTE}: {src} -> {dst}")
        self.src = src
        self.dst = dst


class AmbiguousWakeError(RuntimeError):
    def __init__(self, node_id: int, awoken: list[int]):
        super().__init__(f"{AMBIGUOUS_WAKE}: node {node_id} shares the beam intersection with {awoken}")
        self.node_id = node_id
        self.awoken = awoken


class ConfigValidationError(ValueError):
    """
    Carries every offending field so the CLI can report them all at once.
    """
    def __init__(self, fields: dict[str, str]):
        listing = "; ".join(f"{name}: {reason}" for name, reason in fields.items())
        super().__init__(f"{INVALID_CONFIG}: {listing}")
        self.fields = fields
