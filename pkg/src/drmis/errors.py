"""Exception hierarchy shared across the package."""


class DrmisError(Exception):
    """Base class for all package errors."""


class ConfigError(DrmisError):
    """Invalid configuration or construction arguments."""


class DomainError(DrmisError):
    """Argument outside the mathematical domain of an operation."""


class EstimationError(DrmisError):
    """An estimate could not be produced (non-finite inputs, bad state)."""


class CalibrationError(DrmisError):
    """Tilt calibration failed (boundary target, degenerate sample, cap hit)."""


class AllocationError(DrmisError):
    """Budget allocation could not be computed."""


class SamplingError(DrmisError):
    """MCMC or mixture sampling failed."""


class TrainingError(DrmisError):
    """A surrogate could not be fit (non-convergence, degenerate data)."""


class SelectionError(DrmisError):
    """Cross-validation could not pick a winner (every candidate failed)."""


class NumericError(DrmisError):
    """A numeric routine exceeded its validity range (truncation, overflow)."""
