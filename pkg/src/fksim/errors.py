"""Shared exception types."""


class ConfigError(ValueError):
    """Bad configuration value or config file."""


class DomainError(ValueError):
    """Argument outside the validity region of a formula."""


class InputError(ValueError):
    """Missing or inconsistent input data (vertices, field values)."""


class NumericalError(RuntimeError):
    """Numerical routine failed (factorization, overflow, non-convergence)."""
