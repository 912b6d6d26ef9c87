"""Exception types raised across the package."""


class FusionError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(FusionError, ValueError):
    pass


class DomainError(FusionError, ValueError):
    pass


class InvalidDof(FusionError, ValueError):
    pass


class OutOfSupport(FusionError, ValueError):
    pass


class DimensionMismatch(FusionError, ValueError):
    pass


class SingularDenominator(FusionError, ValueError):
    pass


class WeightSumError(FusionError, ValueError):
    pass


class ConfigError(FusionError, ValueError):
    """Raised for malformed or invalid experiment configurations."""


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass
