"""Exception types shared across the package."""


class NldispError(Exception):
    """Base class for package errors."""


class ConfigError(NldispError):
    """Scenario configuration failed to parse or validate."""


class NumericsError(NldispError):
    """A numerical procedure failed (NaN, non-convergence, lost positivity)."""
