"""Exception types shared across the package.

Every error raised deliberately by this package derives from
RoleModelError, so callers can catch one base class. The subclasses
split along the boundaries callers actually branch on: bad shapes,
bad probability values, undefined conditionals, violated structural
preconditions, exhausted iteration budgets, and malformed files.
"""


class RoleModelError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(RoleModelError, ValueError):
    """Operands have incompatible alphabet sizes or axes."""


class DistributionError(RoleModelError, ValueError):
    """A probability vector or table violates its invariants."""


class UndefinedConditionalError(RoleModelError, ValueError):
    """A conditional row was requested for a zero-probability symbol."""


class MarkovViolationError(RoleModelError, ValueError):
    """The operation requires the chain X - Y - Z but the joint violates it."""


class UnsupportedAlphabetError(RoleModelError, ValueError):
    """The operation does not support alphabets of this size."""


class ConvergenceError(RoleModelError, RuntimeError):
    """Iterative minimization exhausted its budget.

    The last iterate is attached as ``last_estimate`` so callers can
    inspect how far the search got.
    """

    def __init__(self, message: str, last_estimate=None):
        super().__init__(message)
        self.last_estimate = last_estimate


class EmptyWindowError(RoleModelError, RuntimeError):
    """A windowed statistic was requested before any sample arrived."""


class SpecFormatError(RoleModelError, ValueError):
    """A scenario, estimator, or sample file failed to parse.

    The message carries the offending path and line number.
    """
