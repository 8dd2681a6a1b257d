"""Exception hierarchy shared by every module of the package."""


class SSSAError(Exception):
    """Base class for all errors raised by :mod:`multisssa`."""


class DataError(SSSAError, ValueError):
    """Invalid input data (shapes, values, files)."""


class DimensionMismatch(DataError):
    pass


class ZeroAtom(DataError):
    pass


class InvalidT(DataError):
    pass


class NotSquare(DataError):
    pass


class NonFinite(DataError):
    pass


class NegativeThreshold(DataError):
    pass


class IndexOutOfRange(DataError):
    pass


class ZeroReference(DataError):
    pass


class LengthMismatch(DataError):
    pass


class TooFewSamples(DataError):
    pass


class IncompleteGrid(DataError):
    pass


class SolverError(SSSAError, ArithmeticError):
    """A solver could not produce a valid iterate."""


class NotPositiveDefinite(SolverError):
    pass


class SolverNonFinite(SolverError, NonFinite):
    """Raised when solver state leaves the finite range.

    Usually means the penalty parameters are too small for the data scale.
    """
