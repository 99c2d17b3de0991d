"""Exception types shared across the package."""


class ParseError(ValueError):
    """Malformed descriptor or element text. ``pos`` is a 0-based offset."""

    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        self.text = text
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


class PreconditionError(ValueError):
    """An operation was called outside its domain (bad window, unsupported group...)."""


class BoundViolation(AssertionError):
    """A measured defect exceeded a bound that is a theorem. Means a bug here."""
