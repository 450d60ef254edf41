"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class WriterIdentError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(WriterIdentError, ValueError):
    pass


class EmptySampleError(WriterIdentError, ValueError):
    pass


class AllSilentError(WriterIdentError, ValueError):
    """Silence removal dropped every point of the sample."""


class DegenerateSignalError(WriterIdentError, ValueError):
    pass


class SingularityError(WriterIdentError, ArithmeticError):
    """Levinson-Durbin residual vanished before reaching the requested order."""

    def __init__(self, stage: int, message: str | None = None):
        self.stage = stage
        super().__init__(message or f"zero prediction residual at recursion stage {stage}")


class SingularMatrixError(WriterIdentError, ArithmeticError):
    pass


class DimensionError(WriterIdentError, ValueError):
    pass


class DomainError(WriterIdentError, ValueError):
    pass


class ZeroVectorError(WriterIdentError, ValueError):
    pass


class FormatError(WriterIdentError, ValueError):
    """Unsupported container, compression or pixel layout."""

    def __init__(self, message: str, tag: str | None = None):
        self.tag = tag
        super().__init__(f"{message} (tag {tag})" if tag else message)


class CorruptFileError(WriterIdentError, ValueError):
    pass


class VersionError(WriterIdentError, ValueError):
    """Training-set file written by an unknown format version."""


class NotTrainedError(WriterIdentError, LookupError):
    pass


class ConfigMismatchError(WriterIdentError, ValueError):
    def __init__(self, expected: str, actual: str):
        self.expected = expected
        self.actual = actual
        super().__init__(f"configuration mismatch:\n  stored:    {expected}\n  requested: {actual}")


class ConfigValidationError(WriterIdentError, ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration: " + "; ".join(self.violations))


class StageError(WriterIdentError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
