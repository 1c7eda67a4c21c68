"""Exception hierarchy shared by all gdcvlc modules."""


class GdcError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GdcError, ValueError):
    """A scalar argument lies outside the domain of the operation."""


class ValidationError(GdcError, ValueError):
    """A structured argument (sequence, matrix, config) is malformed."""


class InfeasibleError(GdcError):
    """The requested configuration cannot be realized."""


class ResourceError(GdcError):
    """The requested computation exceeds a configured size cap."""


class NumericError(GdcError, ArithmeticError):
    """A numerical routine failed to converge."""
