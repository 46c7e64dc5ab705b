"""Exception taxonomy shared by all modules.

Every domain failure raises a subclass of :class:`DelaunayCMCError` carrying a
stable machine-readable ``code`` used by the CLI for structured error output.
"""


class DelaunayCMCError(Exception):
    """Base class for all library errors."""

    code = "error"


class InvalidParameterError(DelaunayCMCError):
    code = "invalid-parameter"


class IntegrationFailureError(DelaunayCMCError):
    code = "integration-failure"


class QuadratureFailureError(DelaunayCMCError):
    code = "quadrature-failure"


class DegeneratePeriodError(DelaunayCMCError):
    """Raised for period-map operations on the cylinder (s_tau = 0)."""

    code = "degenerate-period"


class NotHyperbolicError(DelaunayCMCError):
    code = "not-hyperbolic"


class WindowTooShortError(DelaunayCMCError):
    code = "window-too-short"


class NonzeroMeanError(DelaunayCMCError):
    code = "nonzero-mean"


class LowModePresentError(DelaunayCMCError):
    code = "low-mode-present"


class TruncationMismatchError(DelaunayCMCError):
    code = "truncation-mismatch"


class InvalidGridError(DelaunayCMCError):
    code = "invalid-grid"


class GridTooCoarseError(DelaunayCMCError):
    code = "grid-too-coarse"


class NonManifoldError(DelaunayCMCError):
    code = "non-manifold-input"


class DegenerateMetricError(DelaunayCMCError):
    code = "degenerate-metric"


class RootFindFailureError(DelaunayCMCError):
    code = "root-find-failure"


class ParameterOutOfRangeError(DelaunayCMCError):
    code = "parameter-out-of-range"


class IOFailureError(DelaunayCMCError):
    code = "io-failure"
