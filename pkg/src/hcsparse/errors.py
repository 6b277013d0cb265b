"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed shapes, non-finite entries or out-of-range parameters."""


class NotAFrameError(InvalidInputError):
    """The vectors do not generate the module (lower frame bound vanishes)."""


class NumericalError(RuntimeError):
    """A linear-algebra kernel failed to converge."""


class InconsistencyError(RuntimeError):
    """Two routes that must agree disagree; indicates a bug, not bad input."""
