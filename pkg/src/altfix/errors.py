"""Exception hierarchy shared by every altfix module."""


class AltfixError(Exception):
    """Base class for all errors raised by altfix."""


class DomainError(AltfixError, ValueError):
    """A point lies outside the carrier, or an evaluation left its domain."""


class ParameterError(AltfixError, ValueError):
    """A numeric parameter is outside the range its condition allows."""


class PreconditionError(AltfixError):
    """A hypothesis required before checking (e.g. psi subunitary) does not hold."""


class ExtractionError(AltfixError):
    """Rank sequences could not be built from a finite prefix."""

    def __init__(self, message, first_failing_j=None):
        super().__init__(message)
        self.first_failing_j = first_failing_j
