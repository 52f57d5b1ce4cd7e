"""Exception types shared across the library."""

from __future__ import annotations

__all__ = ["ItersimError", "ConfigError", "NumericsError", "UnsupportedOperationError"]


class ItersimError(Exception):
    """Base class for all itersim-specific failures."""


class ConfigError(ItersimError):
    """Invalid configuration: bad key, bad value, or violated precondition.

    The message names the offending key or parameter so the CLI can surface
    it verbatim (exit code 2).
    """


class NumericsError(ItersimError):
    """Runtime numerical failure: non-finite state, exhausted retries.

    Mapped to CLI exit code 1.
    """


class UnsupportedOperationError(ItersimError):
    """The requested operation is not defined for this process or input."""
