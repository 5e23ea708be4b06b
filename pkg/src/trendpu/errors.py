"""Exception types shared across the package."""


class TrendPUError(Exception):
    """Base class for all package errors."""


class LengthError(TrendPUError, ValueError):
    """A score trace is too short for the requested statistic."""


class ShapeError(TrendPUError, ValueError):
    """Array shapes or lengths disagree."""


class SizeError(TrendPUError, ValueError):
    """Too few elements (empty batch, fewer than two values, ...)."""


class DomainError(TrendPUError, ValueError):
    """Non-finite or otherwise out-of-domain numeric input."""


class NumericError(TrendPUError, ArithmeticError):
    """Training produced a non-finite loss or gradient."""


class ConfigurationError(TrendPUError, ValueError):
    """Invalid configuration value or combination."""


class DegenerateDistributionError(TrendPUError, ValueError):
    """All values are equal, so no meaningful two-way split exists."""


class DegeneratePartitionError(TrendPUError, ValueError):
    """One pseudo-class is empty."""


class EvaluationUnavailableError(TrendPUError, LookupError):
    """Ground-truth labels are required but absent."""


class UnlearnableHyperplaneError(TrendPUError, ValueError):
    """|P|/|U| <= pi: the PU decision hyperplane does not exist."""


class ParseError(TrendPUError, ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StageError(TrendPUError, RuntimeError):
    """A pipeline stage failed; wraps the original exception."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
