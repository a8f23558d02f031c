"""Exception types shared across the package.

ConfigError maps to CLI exit code 2, NumericsError to exit code 3.
"""


class ConfigError(ValueError):
    """Invalid configuration or arguments."""


class NumericsError(RuntimeError):
    """A numerical self-check failed (cross-route disagreement, lost isolation)."""
