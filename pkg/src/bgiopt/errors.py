"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: InputError/ConfigError exit with 1,
NumericalError with 2.
"""


class BgioptError(Exception):
    """Base class for all package errors."""


class InputError(BgioptError):
    """Invalid data or arguments supplied by the caller."""


class ConfigError(InputError):
    """Malformed or inconsistent run configuration."""


class NumericalError(BgioptError):
    """A numerical computation failed (non-finite state, blow-up)."""
