"""Exception hierarchy shared by every orbitq module.

Each exception carries the process exit code the CLI reports for it.
"""


class OrbitQError(Exception):
    exit_code = 3


class ConfigError(OrbitQError, ValueError):
    """Malformed or unknown configuration input."""

    exit_code = 2


class NumericError(OrbitQError, ArithmeticError):
    """A numerical precondition failed (closure, hyperbolicity, ...)."""

    exit_code = 3


class UnknownAlgebra(ConfigError):
    pass


class ClosureError(NumericError):
    """A matrix expected to lie in span(basis) does not."""


class LogDomainError(NumericError):
    pass


class DegenerateTraceForm(NumericError):
    pass


class NotHyperbolic(NumericError):
    pass


class NotTangent(NumericError):
    pass


class SingularFrame(NumericError):
    pass


class BasisMismatch(NumericError):
    pass


class SingularKilling(NumericError):
    pass


class NotCartan(NumericError):
    pass


class DefectiveAd(NumericError):
    pass


class NotCentral(NumericError):
    pass


class FactorizationError(NumericError):
    pass


class NotFixedPoint(NumericError):
    pass


class BoundaryMismatch(NumericError):
    pass


class NotInLevi(NumericError):
    pass


class CellEscape(NumericError):
    """The group element lies outside the dense cell exp(u-) L exp(u)."""


class DatumError(NumericError):
    pass
