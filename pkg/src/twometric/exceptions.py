"""Exception types shared across the solver modules."""


class TwoMetricError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(TwoMetricError, ValueError):
    """Invalid argument: bad dimension, out-of-range parameter, infeasible point."""


class NumericError(TwoMetricError):
    """Non-finite values or numerically degenerate state encountered."""


class MetricError(TwoMetricError):
    """The metric could not be applied within its eigenvalue bounds."""


class BacktrackCapError(TwoMetricError):
    """Line search exhausted its backtracking budget.

    Carries a diagnostics dict; under the stated smoothness and metric
    bounds a finite step is guaranteed, so hitting the cap signals a wrong
    Lipschitz constant or a metric-bound violation.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
