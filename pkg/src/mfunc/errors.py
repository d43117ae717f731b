"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class MFuncError(Exception):
    exit_code = 1


class DomainError(MFuncError, ValueError):
    """Argument outside the domain of an operation."""

    exit_code = 2


class DataError(MFuncError):
    """Corrupt or incomplete arithmetic data (e.g. a Deligne violation)."""

    exit_code = 3


class IncompleteDataError(DataError):
    pass


class SingularityError(DomainError):
    """Principal branch of log(1 - a X) is not defined (|a| X >= 1)."""


class ResourceError(MFuncError):
    exit_code = 4


class AccuracyError(MFuncError):
    """A numerical tolerance could not be met."""

    exit_code = 3

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class QuadratureError(AccuracyError):
    pass


class CutoffTooSmallError(AccuracyError):
    def __init__(self, message, achieved=None, suggested_cutoff=None):
        super().__init__(message, achieved)
        self.suggested_cutoff = suggested_cutoff


class InversionQualityError(AccuracyError):
    pass


class PreflightError(AccuracyError):
    """Fewer than the required number of primes show |w|^(-1/2) decay."""


class CoverageError(AccuracyError):
    def __init__(self, message, uncovered=None):
        super().__init__(message, uncovered)
        self.uncovered = uncovered


class GridTooSmallError(AccuracyError):
    pass


class ConsistencyError(AccuracyError):
    """Two independent evaluations of the same quantity disagree."""
