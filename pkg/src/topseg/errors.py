"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: ValidationError (and subclasses) -> 2,
MissingArtifactError -> 3. Anything else is a bug.
"""


class TopsegError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(TopsegError):
    """Input data violates a documented invariant."""


class ParseError(ValidationError):
    """A file could not be parsed; message names the offending line."""


class EmptyDocumentError(ValidationError):
    """An HTML input contained no extractable text."""


class MissingArtifactError(TopsegError):
    """A pipeline stage was invoked before its upstream artifact exists."""

    def __init__(self, message: str, producer_stage: str | None = None):
        super().__init__(message)
        self.producer_stage = producer_stage
