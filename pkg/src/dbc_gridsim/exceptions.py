"""Custom exceptions for the grid simulator."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .kernel import Event


class SimulationError(Exception):
    """Base exception for simulator errors."""

    pass


class EntityRegistrationError(SimulationError):
    """Raised when an entity cannot be registered with the kernel."""

    pass


class SchedulingError(SimulationError):
    """Raised when an event cannot be scheduled or the kernel cannot run."""

    pass


class HandlerError(SimulationError):
    """Raised when an entity handler fails while processing an event."""

    def __init__(self, event: Event, cause: BaseException) -> None:
        self.event = event
        self.cause = cause
        super().__init__(
            f"handler for entity {event.dest} failed on event seq={event.seq} "
            f"tag={event.tag} at t={event.fire_time!r}: {cause}"
        )


class NetworkError(SimulationError):
    """Raised for invalid link parameters."""

    pass


class RandomFactorError(SimulationError):
    """Raised when uncertainty factors or draws fall outside [0, 1]."""

    pass


class BoundsError(SimulationError):
    """Raised when deadline/budget bounds cannot be derived."""

    pass


class PlanSyntaxError(SimulationError):
    """Raised when a plan file does not parse."""

    def __init__(self, message: str, line: int, col: int, expected: str) -> None:
        self.line = line
        self.col = col
        self.expected = expected
        super().__init__(f"{line}:{col}: {message} (expected {expected})")


class PlanValidationError(SimulationError):
    """Raised when a parsed plan or an override is semantically invalid."""

    pass


class UnboundMarkerError(SimulationError):
    """Raised when a substitution marker has no binding."""

    def __init__(self, name: str, position: int) -> None:
        self.name = name
        self.position = position
        super().__init__(f"unbound marker ${name!s} at position {position}")


class ConfigurationError(SimulationError):
    """Raised when configuration is invalid."""

    pass


class ReportError(SimulationError):
    """Raised when report files cannot be written."""

    pass
