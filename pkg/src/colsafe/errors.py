"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid experiment configuration; maps to CLI exit code 3."""
