"""Exception types shared across the package."""


class DiurnalVolError(Exception):
    """Base class for package errors."""


class ConfigError(DiurnalVolError, ValueError):
    """Invalid parameters or configuration."""


class DataError(DiurnalVolError, ValueError):
    """Malformed or unusable input data."""


class DegenerateError(DataError):
    """Input carries no usable variation, e.g. a constant price path."""
