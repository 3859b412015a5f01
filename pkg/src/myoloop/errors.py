"""Exception types raised across the package."""
from __future__ import annotations


class MyoloopError(Exception):
    """Base class for package-specific errors."""


class StreamFormatError(MyoloopError):
    """Raw EMG stream or file violates the stream contract.

    Carries optional ``path`` and ``line`` so CLI diagnostics can name the
    offending location.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        if path is not None:
            where = path if line is None else f"{path}:{line}"
            message = f"{where}: {message}"
        super().__init__(message)


class DimensionMismatchError(MyoloopError):
    """Feature vector dimension does not match the fitted model."""


class RegularizationRequiredError(MyoloopError):
    """Pooled within-class scatter is singular and no ridge was requested."""


class DegenerateAxisError(MyoloopError):
    """A movement centroid coincides with the rest centroid."""

    def __init__(self, movement: str):
        self.movement = movement
        super().__init__(f"degenerate axis: movement {movement!r} has no offset from rest")


class EmptyAxisSetError(MyoloopError):
    """Classification attempted with no active movement axes."""


class ProtocolStateError(MyoloopError):
    """Operation illegal in the session's current phase."""


class BudgetExhaustedError(MyoloopError):
    """Exploration time budget is already spent."""


class TrialFinishedError(MyoloopError):
    """A cursor-task trial was stepped after adjudication."""


class MessageError(MyoloopError):
    """Malformed or out-of-contract wire message."""
