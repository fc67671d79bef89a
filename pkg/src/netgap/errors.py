"""Exception taxonomy shared across the package.

Invalid arguments raise the builtin ``ValueError``; everything that can go
wrong at runtime (wire, disk, scheduling) gets a distinct class below so
callers can react without string matching.
"""


class NetgapError(Exception):
    """Base class for all package-specific errors."""


class ProtocolError(NetgapError):
    """A peer violated the measurement wire protocol (bad frame, bad snapshot)."""


class TransportError(NetgapError):
    """The connection could not be established or died mid-test."""


class IncompleteTestError(NetgapError):
    """A test aborted before 10% of its configured duration elapsed."""


class BusyError(NetgapError):
    """Waiting for the exclusive test slot exceeded the allowed time."""


class ValidationError(NetgapError):
    """A record violates the sample invariants."""


class BatchImportError(ValidationError):
    """An import batch was rejected; ``line_number`` names the offending row."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class StorageError(NetgapError):
    """The on-disk log could not be read or written."""


class InsufficientDataError(NetgapError):
    """Not enough data to compute the requested statistic."""


class StartupError(NetgapError):
    """A server could not bind its address."""
