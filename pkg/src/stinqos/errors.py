"""Exception types shared across the package.

The CLI maps each category to its own exit code, so numerical failures can be
told apart from bad input.
"""


class QosError(Exception):
    """Base class for all package errors."""

    category = "error"


class DomainError(QosError, ValueError):
    category = "domain"


class UnsupportedArgumentError(DomainError):
    category = "unsupported-argument"


class TruncationError(QosError, ArithmeticError):
    """A series did not converge within its term budget."""

    category = "truncation"

    def __init__(self, message, partial=float("nan"), tail_bound=float("inf")):
        super().__init__(message)
        self.partial = partial
        self.tail_bound = tail_bound


class StabilityError(QosError, ArithmeticError):
    """A queueing bound was requested outside its stability region."""

    category = "stability"

    def __init__(self, message, margin=float("nan")):
        super().__init__(message)
        self.margin = margin


class QuadratureError(QosError, ArithmeticError):
    category = "quadrature"


class ConfigError(QosError, ValueError):
    category = "config"
