"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class SingularFilterError(DomainError):
    """The measurement filter is singular (``gamma == 1``)."""


class DegenerateSpectrumError(DomainError):
    """The spectral density vanishes identically."""


class ConfigurationError(ValueError):
    """Inconsistent or incomplete run configuration."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its tolerance.

    The best estimate reached before giving up is kept in ``estimate``.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ResourceError(RuntimeError):
    """The requested computation exceeds a work or memory budget."""
