"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid chain, reservoir or run configuration."""


class DomainError(ValueError):
    """Argument outside the domain where a quantity is defined."""


class NumericalError(RuntimeError):
    """A numerical routine failed (bracketing, eigensolver, residual check)."""


class AccuracyError(NumericalError):
    """Quadrature did not reach the requested accuracy."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class AccuracyWarning(UserWarning):
    """Step-halving or similar self-consistency check exceeded its tolerance."""
