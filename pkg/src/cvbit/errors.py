"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`CvbitError`.
The CLI maps :class:`UsageError` subclasses to exit code 2 and every other
:class:`CvbitError` to exit code 3.
"""


class CvbitError(Exception):
    """Base class for all package errors."""


class UsageError(CvbitError, ValueError):
    """Malformed user input (state specs, config files, flags)."""


class SpecParseError(UsageError):
    pass


class ConfigError(UsageError):
    pass


class NumericError(CvbitError, ArithmeticError):
    """A numerical precondition or postcondition failed."""


class NonSymmetric(NumericError):
    pass


class Unphysical(NumericError):
    pass


class DomainError(NumericError):
    pass


class NotSymplectic(NumericError):
    pass


class ExhaustedAttempts(NumericError):
    pass


class OutOfRange(NumericError, ValueError):
    pass


class TailMassExceeded(NumericError):
    pass


class NotHermitian(NumericError):
    pass


class NotNormalized(NumericError):
    pass


class CutoffCapExceeded(NumericError):
    pass


class NotConverged(NumericError):
    pass


class AllZero(NumericError):
    pass


class GridUnderflow(NumericError):
    pass


class Empty(NumericError):
    pass
