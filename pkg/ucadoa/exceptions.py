class UcaDoaError(Exception):
    """Base class for every error raised by ucadoa."""


class InvalidArgumentError(UcaDoaError, ValueError):
    """An argument violates a documented precondition."""


class ConfigError(UcaDoaError, ValueError):
    """An experiment configuration is malformed or inconsistent."""


class DegeneratePatternError(UcaDoaError):
    """The array pattern never falls 3 dB below its peak inside the scan range."""


class DegenerateCovarianceError(UcaDoaError):
    """A covariance matrix carries no positive eigenvalue."""


class DegenerateFocusingError(UcaDoaError):
    """The focusing product has no singular value above the floor."""


class UnidentifiableScenarioError(UcaDoaError):
    """The DoA block of the Fisher matrix cannot be inverted."""
