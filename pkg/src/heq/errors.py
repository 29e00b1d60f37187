"""Exception types shared across the package."""


class HeqError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(HeqError):
    pass


class IntersectionNotConverged(HeqError):
    pass


class PointNotInSet(HeqError):
    pass


class UnsupportedKind(HeqError):
    pass


class PointOutsideDomain(HeqError):
    pass


class DegenerateSample(HeqError):
    pass


class ScaleNonpositive(HeqError):
    pass


class NoClosedForm(HeqError):
    pass


class InnerSolverDiverged(HeqError):
    pass


class NonpositiveParameter(HeqError):
    pass


class ScheduleOutOfRange(HeqError):
    pass


class UnknownTheorem(HeqError):
    pass


class InconsistentScheduleSet(HeqError):
    pass


class NoIterations(HeqError):
    pass


class SolutionNotProvided(HeqError):
    pass


class NoAnalyticForm(HeqError):
    pass


class OracleNotConverged(HeqError):
    pass


class SolutionSetNotProjectable(HeqError):
    pass


class ParseError(HeqError):
    """Problem-file syntax or schema error, anchored to a source line."""

    def __init__(self, message, lineno=None, filename=None):
        self.message = message
        self.lineno = lineno
        self.filename = filename
        prefix = ""
        if filename is not None:
            prefix += str(filename)
        if lineno is not None:
            prefix += f":{lineno}"
        super().__init__(f"{prefix}: {message}" if prefix else message)
