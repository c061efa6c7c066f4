"""Exception types raised across the package."""

from __future__ import annotations


class SCMError(Exception):
    """Base class for all errors raised by scmkit."""


# --- data ingestion -------------------------------------------------------


class DataError(SCMError):
    pass


class MalformedHeader(DataError):
    pass


class DuplicateCell(DataError):
    def __init__(self, unit: str, time: int):
        super().__init__(f"duplicate cell for unit {unit!r} at time {time}")
        self.unit = unit
        self.time = time


class UnparsableValue(DataError):
    def __init__(self, row: int, detail: str):
        super().__init__(f"row {row}: {detail}")
        self.row = row


# --- study validation -----------------------------------------------------


class ValidationError(SCMError):
    pass


class InvalidStudySpec(ValidationError, ValueError):
    pass


class TreatedMissing(ValidationError):
    pass


class TreatedIncomplete(ValidationError):
    pass


class NoPostPeriods(ValidationError):
    pass


class TooFewPrePeriods(ValidationError):
    pass


class EmptyDonorPool(ValidationError):
    def __init__(self, message: str, unit: str | None = None):
        super().__init__(message)
        self.unit = unit


class UnknownDonor(ValidationError):
    pass


class UnknownUnit(ValidationError):
    pass


class PlaceboTooLate(ValidationError):
    pass


# --- numerics -------------------------------------------------------------


class DimensionMismatch(SCMError, ValueError):
    pass


class PoolTooLarge(SCMError, ValueError):
    pass


class BadGridStep(SCMError, ValueError):
    pass


class EmptyRange(SCMError, ValueError):
    pass


class EmptySeries(SCMError, ValueError):
    pass


class InfeasibleWeights(SCMError, ValueError):
    pass


class BadDimensions(SCMError, ValueError):
    pass


class NonConvergenceWarning(RuntimeWarning):
    """The weight solver hit max_iter; the returned solution has converged=False."""
