"""Shared exception types for the ocstudio package.

Every layer raises from this small vocabulary so the API and CLI can map
failures to status codes / exit codes in one place.
"""

from __future__ import annotations

__all__ = [
    "OcstudioError",
    "ValidationError",
    "NotFoundError",
    "StorageError",
    "FormatError",
    "ConfigError",
    "ProviderError",
    "TransportError",
    "BudgetError",
    "ScriptMismatch",
    "TurnFailed",
]


class OcstudioError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(OcstudioError):
    """Input violates a documented constraint (bad name, empty message, ...)."""


class NotFoundError(OcstudioError):
    """A referenced profile, session, or revision does not exist."""


class StorageError(OcstudioError):
    """The persistence layer failed (I/O error, corrupt directory layout)."""


class FormatError(OcstudioError):
    """A serialized log stream is malformed.

    ``offset`` is the byte offset (within the imported stream) of the start
    of the offending line, so tooling can point at the damage.
    """

    def __init__(self, message: str, *, offset: int) -> None:
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ConfigError(OcstudioError):
    """The service configuration is unusable (missing backend, bad value)."""


class ProviderError(OcstudioError):
    """Base class for language-model provider failures."""


class TransportError(ProviderError):
    """The provider could not produce a reply.

    ``retriable`` tells callers whether trying again might help (timeouts,
    5xx) or not (auth failures, exhausted scripts).
    """

    def __init__(self, message: str, *, retriable: bool) -> None:
        super().__init__(message)
        self.retriable = retriable


class BudgetError(ProviderError):
    """The prompt alone already exceeds the request's token budget."""


class ScriptMismatch(OcstudioError):
    """A replay's script does not line up with the recorded artist messages."""


class TurnFailed(OcstudioError):
    """A turn could not produce a valid trajectory after all retries.

    Carries the last parse error and the number of attempts made. The
    incoming artist message is already persisted when this is raised.
    """

    def __init__(self, message: str, *, parse_error=None, attempts: int = 0) -> None:
        super().__init__(message)
        self.parse_error = parse_error
        self.attempts = attempts
