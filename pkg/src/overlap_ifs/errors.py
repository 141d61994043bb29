"""Exception types shared across the package."""


class OverlapIfsError(Exception):
    """Base class for package-specific errors."""


class ConfigError(OverlapIfsError):
    """A run configuration is malformed or inconsistent."""


class AlphabetError(OverlapIfsError, ValueError):
    """A word uses a symbol outside the system's alphabet."""


class BudgetError(OverlapIfsError):
    """An enumeration would exceed the configured work budget."""


class UnsupportedSystemError(OverlapIfsError):
    """The operation requires a system shape this build does not support."""


class FlaggedSampleError(OverlapIfsError):
    """Too many Monte Carlo samples had to be excluded as uncertain."""
