"""Exception hierarchy shared by the library and the command line."""


class SharpVarError(Exception):
    """Base class for all errors raised by :mod:`sharpvar`."""


class InvalidInput(SharpVarError, ValueError):
    """Malformed data: empty vectors, non-finite values, length mismatches."""


class InvalidDesign(SharpVarError, ValueError):
    """An experiment design (N, n, m) that violates the sampling constraints."""


class TooLarge(SharpVarError, ValueError):
    """A request for exhaustive enumeration beyond the supported size."""


class NumericalFailure(SharpVarError, ArithmeticError):
    """An iterative numerical routine failed to converge."""
