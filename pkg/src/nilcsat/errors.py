class NilcsatError(Exception):
    """Base class for errors raised by this package."""


class SpecMismatch(NilcsatError, ValueError):
    pass


class LevelError(NilcsatError, ValueError):
    pass


class ArityError(NilcsatError, ValueError):
    pass


class CeilingError(NilcsatError):
    """A resource ceiling would be exceeded; ``required`` names what was needed."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class ParseError(NilcsatError, ValueError):
    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"{message}{where}")
