"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 config, 3 data, 4 workflow precondition (non-Frechet), 5 numerical failure.
"""


class SuccexError(Exception):
    exit_code = 5


class ConfigError(SuccexError):
    exit_code = 2

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key {key!r}: {message}")


class DataError(SuccexError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, path, line, message):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class EmptySeriesError(DataError):
    pass


class WindowError(DataError, ValueError):
    """Invalid or too-large moving window / block length."""


class InvalidArgumentError(SuccexError, ValueError):
    """Bad probability, quantile level, period, lag or similar argument."""

    exit_code = 2


class InsufficientDataError(DataError):
    pass


class InsufficientExceedancesError(InsufficientDataError):
    pass


class WorkflowPreconditionError(SuccexError):
    exit_code = 4

    def __init__(self, step, message):
        self.step = step
        super().__init__(f"[step {step}] {message}")


class NumericalError(SuccexError):
    exit_code = 5


class FitInfeasibleError(NumericalError):
    pass


class ScaleCollapseError(NumericalError):
    pass


class FitInconsistencyError(NumericalError):
    pass


class InvalidComparisonError(SuccexError, ValueError):
    exit_code = 2


class NormalizationDomainError(NumericalError):
    def __init__(self, indices):
        self.indices = list(indices)
        shown = ", ".join(str(i) for i in self.indices[:20])
        more = "" if len(self.indices) <= 20 else f" (+{len(self.indices) - 20} more)"
        super().__init__(f"maxima outside model support at indices {shown}{more}")


class DegenerateDesignError(NumericalError):
    pass


class LogDomainError(NumericalError, ValueError):
    pass


class InfeasibleGridError(NumericalError):
    pass
