"""Exceptions shared across modules."""


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class NumericalAbort(RuntimeError):
    """A run was stopped because the numerics broke down (CLI exit code 3)."""
