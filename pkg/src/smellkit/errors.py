"""Exception types shared across the toolkit."""


class SmellkitError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SmellkitError):
    """An input document is not well-formed.

    `line` and `column` are set when the underlying parser reports a position.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(SmellkitError):
    """A well-formed document violates a model invariant (e.g. duplicate ids)."""


class UnknownEntityError(SmellkitError):
    """An entity id or class name does not resolve in the system model."""
