"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user input: bad shapes, bad config values, malformed files."""


class NumericalError(RuntimeError):
    """A computation failed numerically (non-PSD matrix, singular factor, ...)."""
