"""Exception types raised by pexcite."""


class InputError(ValueError):
    """Malformed or inconsistent arguments (shapes, signs, zero directions)."""


class RangeError(ValueError):
    """A requested time window does not fit on the sampling grid."""


class GeometryError(ValueError):
    """Subspaces that were required to be complementary are not.

    ``condition`` holds the condition number of the stacked bases when it
    could be computed.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DivergenceError(RuntimeError):
    """The adaptive-law integration produced a non-finite state."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step
