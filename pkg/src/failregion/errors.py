"""Exception types shared across the package."""


class FailRegionError(Exception):
    """Base class for all failregion errors."""


class InvalidDimensionError(FailRegionError):
    """Dimension is zero, negative, or unsupported for the requested operation."""


class InfeasibleRegionError(FailRegionError):
    """The requested region cannot be placed inside the input domain."""


class NoFailureFoundError(FailRegionError):
    """The first-failure search exhausted its budget without a failing input."""


class OracleUnavailableError(FailRegionError):
    """An external oracle process could not be spawned."""


class ConfigError(FailRegionError):
    """A configuration or matrix file could not be parsed or validated."""
