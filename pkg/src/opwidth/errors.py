"""Exception types shared across the library."""


class OpwidthError(Exception):
    """Base class for all library errors."""


class FormatError(OpwidthError):
    """Raised when a binary stream or JSON descriptor is malformed."""


class ValidationError(OpwidthError):
    """Raised when an argument violates a documented precondition."""


class InfeasibleError(OpwidthError):
    """Raised when a constructed object cannot satisfy its own certificate."""
