"""Exception types raised by the package."""


class UnderspreadError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(UnderspreadError, ValueError):
    """An input violates a documented precondition.

    ``field`` names the offending parameter or config key when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class DegenerateFusionError(UnderspreadError, ArithmeticError):
    """Information-form fusion hit a singular covariance."""


class InvalidTruncationError(ValidationError):
    pass


class NonIntegerGridError(ValidationError):
    pass


class UndefinedCorrelationError(UnderspreadError, ArithmeticError):
    """The profile carries no energy, so the correlation coefficient is 0/0."""


class PrecisionError(UnderspreadError, ArithmeticError):
    """A quadrature could not reach the requested tolerance on its grid."""

    def __init__(self, message, estimate=None, error=None):
        self.estimate = estimate
        self.error = error
        super().__init__(message)
