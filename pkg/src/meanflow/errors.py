"""Exception hierarchy for configuration, domain, numerical and estimation failures."""


class MeanflowError(Exception):
    """Base class for all package-specific failures."""


class ConfigurationError(MeanflowError):
    """Invalid configuration detected before or at launch (CFL, sizes, presets)."""


class DomainError(MeanflowError):
    """Argument outside the mathematical domain of the operation."""


class NumericalError(MeanflowError):
    """Mid-run numerical failure: NaN, blow-up, non-convergent iteration."""


class EstimationError(MeanflowError):
    """Statistical estimator cannot be formed (empty bins, degenerate ensemble)."""
