"""Error hierarchy shared across the package.

Every error carries a machine-readable category and the process exit code
the CLI maps it to: config=2, io=3, data=4, numeric=5.
"""


class PolabError(Exception):
    category = "data"
    exit_code = 4


class ConfigError(PolabError):
    category = "config"
    exit_code = 2


class InputError(PolabError):
    """Unreadable or missing input files."""

    category = "io"
    exit_code = 3


class DataError(PolabError):
    """Input was readable but its contents violate the declared contract."""

    category = "data"
    exit_code = 4


class NumericError(PolabError):
    """Degenerate input to a statistical routine (constant series, n too small)."""

    category = "numeric"
    exit_code = 5


class FitRefusedError(NumericError):
    """A distribution fit was refused; the message states the reason."""
