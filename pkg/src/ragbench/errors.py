"""Exception types shared across the package."""


class RagbenchError(Exception):
    """Base class for every error raised by this package."""


class InputError(RagbenchError, ValueError):
    """An operation was called with arguments violating its precondition."""


class CorpusError(RagbenchError):
    """A corpus record is malformed or the record stream is unreadable."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ProviderError(RagbenchError):
    """A remote provider call failed after its bounded retries."""


class GenerationError(RagbenchError):
    """The chat provider returned an unusable (empty) completion."""


class JudgeParseError(RagbenchError):
    """The judge response carries no parsable integer rating."""


class JudgeRangeError(RagbenchError):
    """The judge produced an integer rating outside 1..5."""


class ConstantInputError(InputError):
    """A correlation is undefined because one input vector is constant."""


class NotFoundError(RagbenchError):
    """A referenced session or task does not exist."""


class ValidationError(RagbenchError):
    """A submitted annotation violates the rating schema."""
