"""Exception hierarchy.

Errors split into two families so callers (and the CLI exit codes) can tell
a bad request from a numerical breakdown.
"""


class BCPathError(Exception):
    """Base class for all package errors."""


class UsageError(BCPathError, ValueError):
    """The request itself is malformed or unsupported."""


class NumericalFailure(BCPathError, ArithmeticError):
    """A numerical procedure could not deliver a trustworthy value."""


class IncompatibleDomain(UsageError):
    pass


class NonUnitary(UsageError):
    pass


class NoClosedForm(UsageError):
    pass


class NoImageForm(UsageError):
    pass


class MethodUnavailable(UsageError):
    pass


class EndpointOnBoundary(UsageError):
    pass


class PoleProximity(NumericalFailure):
    pass


class SingularKreinMatrix(NumericalFailure):
    pass


class RootFindingFailure(NumericalFailure):
    pass


class InsufficientSpectrum(NumericalFailure):
    pass


class ContourFailure(NumericalFailure):
    pass


class DivergentIntegral(NumericalFailure):
    pass


class WindingTruncation(NumericalFailure):
    pass
