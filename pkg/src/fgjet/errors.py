"""Exception types shared across the package."""


class JetError(Exception):
    """Base class for all fgjet errors."""


class UsageError(JetError):
    """Mismatched operands or invalid arguments (caller bug)."""


class DegreeCapError(JetError):
    """An operation needs more jet degree than the input carries."""


class DegenerateMetricError(JetError):
    """Metric is singular (or not positive definite) at the base point."""


class CheckFailedError(JetError):
    """A requested cross-validation disagreed beyond tolerance."""
