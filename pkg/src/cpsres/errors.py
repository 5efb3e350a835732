"""Exception hierarchy.

``ValidationError`` covers bad inputs (CLI exit status 1); ``NumericalError``
covers failures of the numerical procedures themselves (exit status 2).
"""


class CpsError(Exception):
    pass


class ValidationError(CpsError, ValueError):
    pass


class NumericalError(CpsError, ArithmeticError):
    pass


class EmptyDistribution(ValidationError):
    pass


class NegativeFraction(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class DegreeZero(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class DegenerateRange(ValidationError):
    pass


class Unsolvable(ValidationError):
    pass


class UnsupportedParams(ValidationError):
    pass


class WrongDelay(ValidationError):
    pass


class EmptyDegrees(ValidationError):
    pass


class UnknownKey(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonMonotoneIndicator(NumericalError):
    pass
