"""Exception types raised by jamflow."""


class JamflowError(Exception):
    """Base class for all package errors."""


class DomainError(JamflowError, ValueError):
    """An argument lies outside the domain of an operation."""


class ModeError(JamflowError):
    """An operation was called in a mode it does not support."""


class CollisionError(JamflowError):
    """Two particles were moved onto the same site."""


class WindowError(JamflowError):
    """An observation window is outside the region the simulation covers."""


class AdmissibilityError(DomainError):
    """A constructed configuration is not admissible."""


class DensityError(DomainError):
    """A requested particle density cannot be realized."""


class SizeError(DomainError):
    """A construction would not fit in memory."""


class RangeError(DomainError):
    """A velocity token is outside [-vmax, vmax]."""


class ParseError(JamflowError, ValueError):
    def __init__(self, message, index=None):
        self.index = index
        if index is not None:
            message = f"token {index}: {message}"
        super().__init__(message)


class AuditError(JamflowError):
    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)
