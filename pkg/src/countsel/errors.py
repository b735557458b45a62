"""Exception types shared across the package."""


class CountselError(Exception):
    """Base class for all package-specific errors."""


class ConstraintViolation(CountselError):
    """A parameter vector violates an invariant of its model specification."""

    def __init__(self, which: str, message: str = ""):
        self.which = which
        super().__init__(message or which)


class ContractionViolation(CountselError):
    """Contraction condition a + b < 1 fails."""


class DomainError(CountselError):
    """An argument is outside the domain of the operation."""


class DataFormatError(CountselError):
    """A data file could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class OptimFailure(CountselError):
    """No optimizer start produced a usable maximizer."""


class SingularInformation(CountselError):
    """The information matrix J is numerically singular; no covariance."""


class FamilyMismatch(CountselError):
    """Outcome classification attempted across incompatible model kinds."""


class AllFitsFailed(CountselError):
    """Every model in a selection collection failed to fit."""
