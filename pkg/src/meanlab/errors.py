"""Shared exception types."""


class InvalidArgument(ValueError):
    """An operation was called with arguments outside its contract."""


class SamplingExhausted(RuntimeError):
    """Rejection sampling failed after the bounded number of attempts."""


class UndefinedScore(ArithmeticError):
    """A score is undefined for the given input (e.g. zero energy)."""
