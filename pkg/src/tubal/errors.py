"""Exception types raised across the package."""


class TubalError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(TubalError, ValueError):
    pass


class NonRealResult(TubalError, ValueError):
    """An inverse transform expected to be real carried a large imaginary part."""


class SvdFailure(TubalError, RuntimeError):
    pass


class InvalidRankTarget(TubalError, ValueError):
    pass


class InvalidRank(TubalError, ValueError):
    pass


class InvalidConfig(TubalError, ValueError):
    pass


class ZeroReference(TubalError, ValueError):
    pass


class FormatError(TubalError, ValueError):
    """Malformed tensor or image file. ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class InconsistentStack(TubalError, ValueError):
    pass
