"""Exception taxonomy shared by all simulator modules."""


class PercosimError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(PercosimError, ValueError):
    """A supplied value violates its documented constraints."""


class FormatError(PercosimError, ValueError):
    """Malformed external input: edge-list text, packet bytes, and the like."""


class DuplicateError(PercosimError):
    """A node or edge that must be unique already exists."""


class NotFoundError(PercosimError, KeyError):
    """A referenced node, edge, or table row does not exist."""

    def __str__(self) -> str:  # KeyError quotes its repr; keep plain text
        return self.args[0] if self.args else ""


class ProtocolError(PercosimError):
    """An in-flight artifact (probe, packet, table update) broke an invariant."""


class StateError(PercosimError):
    """Operation invoked in a state that does not allow it."""


class ConfigError(PercosimError, ValueError):
    """A scenario/codec config document is invalid; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class RoutingError(PercosimError):
    """Route discovery failed."""


class NoNeighborsError(RoutingError):
    """The source has no close-neighbors to probe."""


class NoPathError(RoutingError):
    """No probe reached the destination within the hop ceiling."""


class TransportError(PercosimError):
    """Data transmission failed."""


class NoCapacityError(TransportError):
    """Every path in the route has zero usable bandwidth."""


class StorageError(PercosimError):
    """Distributed-storage operation failed."""


class ConstraintViolationError(StorageError):
    """Local/remote packet counts violate the dispersal inequalities."""


class InsufficientPacketsError(StorageError):
    """The available coded packets do not decode the stored block."""
