"""Exceptions raised by the entrocrit modules."""

from typing import Optional


class EntrocritError(Exception):
    """Base class for every error raised by this package."""


class SizeLimitError(EntrocritError, ValueError):
    pass


class DimensionMismatchError(EntrocritError, ValueError):
    pass


class NotHermitianError(EntrocritError, ValueError):
    pass


class NoConvergenceError(EntrocritError, ArithmeticError):
    pass


class DomainError(EntrocritError, ValueError):
    """A spectral function met an eigenvalue outside its domain."""


class NegativeEntryError(EntrocritError, ValueError):
    pass


class SpectrumMismatchError(EntrocritError, ValueError):
    """Spectra handed to a majorization test do not share a total."""


class ParameterRangeError(EntrocritError, ValueError):
    pass


class IndexOutOfRangeError(EntrocritError, IndexError):
    pass


class EvenDimensionError(EntrocritError, ValueError):
    pass


class MultiplicityNotDivisibleError(EntrocritError, ValueError):
    pass


class BudgetExceededError(EntrocritError, ValueError):
    pass


class NotNormalizedError(EntrocritError, ValueError):
    pass


class NotFullRankError(EntrocritError, ValueError):
    pass


class CertificateMismatchError(EntrocritError, ValueError):
    pass


class InvalidStateError(EntrocritError, ValueError):
    """A matrix failed one of the density-matrix invariants."""

    def __init__(self, invariant: str, message: Optional[str] = None):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if message else invariant)


class StateFormatError(EntrocritError, ValueError):
    """A state file could not be parsed."""
