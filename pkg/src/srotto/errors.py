"""Exception types shared across the package."""


class SrottoError(Exception):
    """Base class for all package errors."""


class RepresentationError(SrottoError, ValueError):
    """Operator or state built on the wrong kind of Hilbert space."""


class ResourceLimitError(SrottoError):
    """Requested representation exceeds the configured size cap."""


class InvalidStateError(SrottoError, ValueError):
    """Input matrix is not a valid density matrix within tolerance."""


class IntegrityError(SrottoError):
    """A trajectory violated trace, Hermiticity or positivity bounds."""


class StiffnessError(SrottoError):
    """Adaptive step size collapsed below the representable floor."""


class InsufficientDataError(SrottoError, ValueError):
    """Too few samples or cycles for the requested statistic."""


class FitError(SrottoError, ValueError):
    """A fit is infeasible or its design matrix is degenerate."""


class UndefinedTemperatureError(SrottoError, ValueError):
    """Effective temperature requested for a non-positive occupation."""


class ConfigError(SrottoError, ValueError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message
