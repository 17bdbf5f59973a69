"""Exception hierarchy shared across the package.

Undefined moments, unsupported parameter ranges, and numerical failures are
always raised as explicit errors, never returned as NaN: silent NaN
propagation is the classic failure mode in heavy-tail code.
"""


class NormexError(Exception):
    """Base class for all package errors."""


class DomainError(NormexError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UndefinedMomentError(DomainError):
    """A moment (mean, variance, skewness, ...) does not exist for this tail index."""


class UnsupportedRangeError(DomainError):
    """Parameters fall outside the range the implementation supports."""


class NumericalError(NormexError, RuntimeError):
    """A numerical routine failed to converge.

    Attributes:
        partial: best value obtained before giving up, if any.
        achieved: error estimate actually achieved, if known.
    """

    def __init__(self, message, partial=None, achieved=None):
        super().__init__(message)
        self.partial = partial
        self.achieved = achieved


class ResolutionError(NumericalError):
    """A grid is too coarse (or too short) to meet its mass/resolution contract."""


class CapacityError(NormexError):
    """A request exceeds the configured memory budget."""


class UsageError(NormexError):
    """The command line was well-formed but semantically unusable."""


# CLI exit codes (documented in README).
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_NUMERICAL = 4
EXIT_CAPACITY = 5
