"""Exception hierarchy shared by all solvers and pipelines."""


class CoverError(Exception):
    """Base class for every error raised by lscover."""


class BadParam(CoverError, ValueError):
    pass


class InfeasibleInstance(CoverError):
    """Some ground element lies in no candidate set."""

    def __init__(self, message, uncovered=()):
        super().__init__(message)
        self.uncovered = list(uncovered)


class SizeLimitExceeded(CoverError):
    pass


class DimensionMismatch(CoverError, ValueError):
    pass


class NotConvex(CoverError):
    pass


class NotInHemisphere(CoverError):
    pass


class ZeroVolume(CoverError):
    pass


class BoundInfeasible(CoverError):
    """No grid parameter gives a finite value for an inf-type bound."""


class ConfigError(CoverError):
    pass


class ReportCorrupted(CoverError):
    pass


class InvariantViolation(CoverError):
    pass
