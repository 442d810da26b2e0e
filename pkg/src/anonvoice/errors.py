"""Exception hierarchy; the CLI maps these onto exit codes."""


class AnonvoiceError(Exception):
    """Base class for all package errors."""


class ConfigError(AnonvoiceError):
    """Invalid configuration or command arguments (CLI exit code 2)."""


class DataError(AnonvoiceError):
    """Invalid or inconsistent input data (CLI exit code 3)."""


class NumericalError(AnonvoiceError):
    """Numerical failure such as a degenerate vector or a failed factorization (CLI exit code 4)."""


class ZeroNormError(NumericalError):
    """A vector that must be non-zero has zero Euclidean norm."""
