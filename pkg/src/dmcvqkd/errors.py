"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class PhysicalityError(ArithmeticError):
    """A covariance matrix or spectrum violates the uncertainty principle."""


class DetectorModelError(DomainError):
    """The thermal-state detector model is undefined (unit efficiency)."""


class ConfigError(ValueError):
    """Invalid run configuration (rates, filter settings, missing fields)."""


class EstimationError(ArithmeticError):
    """Estimator cannot produce a value from the supplied records."""


class LinearizationError(ConfigError):
    """Modulation depth too large for the small-signal modulator model."""
