"""Exception types shared across the package."""


class QKeyLabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QKeyLabError, ValueError):
    """An argument lies outside the operation's domain."""


class ResourceError(QKeyLabError, RuntimeError):
    """A configured resource cap (qubit count, search budget) was exceeded."""


class LifecycleError(QKeyLabError, RuntimeError):
    """Key material was accessed after it vanished."""


class ProtocolError(QKeyLabError, RuntimeError):
    """A protocol run could not complete (retry budget exhausted, desync)."""


class InternalError(QKeyLabError, RuntimeError):
    """Invariant violation that indicates a bug rather than a caller mistake."""


class ConfigError(QKeyLabError, ValueError):
    """A scenario configuration is missing, unknown, or malformed."""
