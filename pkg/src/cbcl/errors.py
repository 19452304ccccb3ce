"""Exception types shared across the package."""


class CbclError(Exception):
    """Base class for all library-specific errors."""


class FormatError(CbclError):
    """Malformed binary container: bad magic, truncation, trailing bytes."""


class DataError(CbclError):
    """Payload parses but carries invalid values (NaN or infinite floats)."""


class ValidationError(CbclError):
    """A domain-type invariant does not hold."""


class ShapeError(CbclError):
    """Vector dimensionality mismatch."""


class StateError(CbclError):
    """Operation requires model state that is not present."""


class ConfigError(CbclError):
    """Infeasible or inconsistent configuration."""


class PlanError(CbclError):
    """Reduction plan is inconsistent with the model it is applied to."""


class MetricError(CbclError):
    """Metric undefined for the given result (for example too few increments)."""
