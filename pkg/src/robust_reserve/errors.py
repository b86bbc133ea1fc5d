"""Exception hierarchy for the robust-reserve package."""


class PricingError(Exception):
    """Base class for all package errors."""


class InvalidDistributionError(PricingError, ValueError):
    """Distribution parameters violate the variant's invariants."""


class InvalidSettingError(PricingError, ValueError):
    """Auction setting parameters violate their contract."""


class DomainError(PricingError, ValueError):
    """Input lies outside the mathematical domain of an operation."""


class QuadratureError(PricingError, ArithmeticError):
    """Numerical integration produced a non-finite or non-converged value.

    Carries the offending residual so callers can report diagnostics.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class SolverError(PricingError, RuntimeError):
    """A root bracket or search could not be established."""
