"""Exception hierarchy.

Every error raised by the package derives from :class:`PvStackError`. The three
mid-level classes map onto the CLI exit codes (config 2, data 3, numerical 4).
"""

from __future__ import annotations


class PvStackError(Exception):
    exit_code = 1


class ConfigError(PvStackError, ValueError):
    exit_code = 2


class DataError(PvStackError, ValueError):
    exit_code = 3


class NumericalError(PvStackError, ArithmeticError):
    exit_code = 4


# --- data ---------------------------------------------------------------
class MalformedRow(DataError):
    pass


class GapInSeries(DataError):
    pass


class UnknownZone(DataError):
    pass


class OutOfRangePower(DataError):
    pass


class ZoneMismatch(DataError):
    pass


class EmptyIntersection(DataError):
    pass


class RangeNotCovered(DataError):
    pass


class EmptyDataset(DataError):
    pass


class FeatureMismatch(DataError):
    pass


class UnknownFeature(DataError):
    pass


class AlreadyNormalized(DataError):
    pass


class IncompleteDay(DataError):
    pass


class LengthMismatch(DataError):
    pass


class MissingArtifact(DataError):
    pass


class SchemaMismatch(DataError):
    pass


# --- configuration / preconditions ----------------------------------------
class InvalidSplit(ConfigError):
    pass


class KTooLarge(ConfigError):
    pass


class TooFewSamples(ConfigError):
    pass


class ZeroCapacity(ConfigError):
    pass


class MemberMismatch(ConfigError):
    pass


# --- numerics ---------------------------------------------------------------
class NoConvergence(NumericalError):
    """Optimizer hit its iteration cap; ``diagnostics`` holds the last state."""

    def __init__(self, message: str, diagnostics: dict | None = None, model=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
        self.model = model


class DegenerateKernel(NumericalError):
    pass


class SingularHessian(NumericalError):
    def __init__(self, message: str, model=None):
        super().__init__(message)
        self.model = model


class NonFinite(NumericalError):
    pass


class AllZeroWeights(NumericalError):
    pass
