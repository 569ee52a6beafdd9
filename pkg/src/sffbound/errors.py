"""Exception hierarchy.

Every error raised on bad input derives from :class:`SffBoundError` and also
from :class:`ValueError`, so callers can catch either.
"""


class SffBoundError(Exception):
    """Base class for all library errors."""


class InputError(SffBoundError, ValueError):
    """Base class for input-validation failures."""


# spectra
class NonHermitianInput(InputError):
    pass


class DimensionZero(InputError):
    pass


class NonpositiveSigma(InputError):
    pass


class NonpositiveBinWidth(InputError):
    pass


class GridTooNarrow(InputError):
    pass


# dynamics
class NonIsometry(InputError):
    pass


class DimensionTooLarge(InputError):
    pass


# projectors / bounds
class DimensionMismatch(InputError):
    pass


class NotHadamard(InputError):
    pass


class EmptyWindow(InputError):
    pass


class GridMismatch(InputError):
    pass


class IndexRange(InputError, IndexError):
    pass


class HorizonOutsideGrid(InputError):
    pass


class WindowTooNarrow(InputError):
    pass


# syk
class OddQ(InputError):
    pass


class QTooLarge(InputError):
    pass


class BadBit(InputError):
    pass


class BadSubsystemSize(InputError):
    pass


# experiment runner
class ConfigError(InputError):
    pass
