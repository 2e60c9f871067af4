"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument is outside the domain an operation accepts."""


class FitError(RuntimeError):
    """A fit (calibration, PCA) could not be carried out on the given data."""


class ParseError(ValueError):
    """A binary or text input file is malformed.

    ``offset`` is the byte offset at which the problem was detected, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class TrainingAborted(RuntimeError):
    """Training produced a non-finite loss.

    The partial history up to (and including) the failing epoch is attached so
    callers can still write diagnostics.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history
