"""Exception hierarchy shared by every module of the package."""


class GSDError(Exception):
    """Base class for all errors raised by gsanatomy."""


class DomainError(GSDError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(GSDError, ValueError):
    """An operation was called with structurally invalid input."""


class InputError(UsageError):
    """A data stream ended before the operation could complete."""


class DesignError(GSDError, ValueError):
    """A sequential design violates one of its invariants."""


class ConfigurationError(GSDError, ValueError):
    """Numerical or solver configuration cannot produce a valid answer."""


class InfeasibleError(ConfigurationError):
    """A spending target cannot be met by any finite boundary."""


class SchemaError(GSDError, ValueError):
    """A design or plan document does not match its schema."""


class ConditioningError(GSDError):
    """Conditioning on an event of probability zero."""


class SupportError(GSDError):
    """A sample lies outside the support adapted to the stopping rule."""


class SetupError(GSDError):
    """A simulation experiment could not be set up (e.g. calibration failed)."""


class SolverError(GSDError):
    """Root finding failed."""


class BracketError(SolverError):
    """The initial interval does not bracket a sign change."""


class AccuracyError(GSDError):
    """Quadrature error exceeded the accepted tolerance."""
