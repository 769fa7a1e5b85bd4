"""Exception hierarchy.

Input-class errors (bad arguments, bad files, violated preconditions) derive
from :class:`InputError`; everything raised by a numerical routine that failed
to do its job derives from :class:`NumericError`.  The CLI maps the two
families onto exit codes 2 and 3.
"""


class GrazeLabError(Exception):
    pass


class InputError(GrazeLabError, ValueError):
    pass


class ApexError(InputError):
    """The apex is inside the body (or too close to its boundary)."""


class ValidationError(InputError):
    pass


class NumericError(GrazeLabError, ArithmeticError):
    pass


class ContinuationError(NumericError):
    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class GeometryError(NumericError):
    pass


class FitError(NumericError):
    pass


class DegenerateError(NumericError):
    pass
