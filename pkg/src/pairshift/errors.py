"""Exception types shared across the package."""


class PairshiftError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PairshiftError, ValueError):
    """An input violates a documented precondition or type invariant."""


class CapacityError(DomainError):
    """A documented size limit was exceeded."""


class EvaluationError(PairshiftError):
    """An outcome function returned a non-finite value."""


class ConvergenceError(PairshiftError, RuntimeError):
    """Iterative fitting failed to reach the requested tolerance."""

    def __init__(self, message: str, deviation: float | None = None,
                 iterations: int | None = None):
        super().__init__(message)
        self.deviation = deviation
        self.iterations = iterations


class FormatError(DomainError):
    """An input file does not follow the documented format."""


class DataError(DomainError):
    """A data value is invalid (bad row, unmapped code, missing wave)."""
