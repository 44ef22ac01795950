"""Exception types shared across the package."""

from __future__ import annotations


class RangeError(ValueError):
    """A numeric argument lies outside its admissible range.

    The message names the violated bound, e.g. "p must be > 1 (got 0.5)".
    """


class BoundaryError(IndexError):
    """A node index that must be strictly interior touches the grid boundary."""


class ZeroGradientError(ValueError):
    """An operation that normalizes by |g| received a zero vector."""


class BlowupError(ArithmeticError):
    """The explicit time stepper produced a non-finite value."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t
