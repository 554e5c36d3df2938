"""Exception types shared across the package."""


class KlyshkoError(Exception):
    """Base class for all package errors."""


class ConfigurationError(KlyshkoError):
    """Invalid parameter values (odd grid size, negative pitch, bad layout)."""


class SamplingError(KlyshkoError):
    """A feature is too small to be resolved on the requested grid."""


class GridMismatchError(KlyshkoError):
    """Two fields or a field and an element live on incompatible grids."""


class CalibrationError(KlyshkoError):
    """A calibration target cannot be met on the given grid."""


class FitError(KlyshkoError):
    """A model fit is degenerate or under-constrained."""
