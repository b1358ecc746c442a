"""Exception types shared across the toolkit."""

from __future__ import annotations


class VoxsynthError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(VoxsynthError):
    """An argument violates an operation's precondition."""


class RetryExhausted(VoxsynthError):
    """Transport or server-side failures persisted beyond the retry budget."""


class ProviderRejected(VoxsynthError):
    """The endpoint rejected the request (4xx) or returned a malformed body."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ParseFailure(VoxsynthError):
    """No JSON value could be extracted from a model response."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class SchemaFailure(VoxsynthError):
    """A JSON value was found but does not match the expected schema."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class GenerationAborted(VoxsynthError):
    """Corpus generation hit its failure budget; partial results attached."""

    def __init__(self, message: str, pairs=None, report=None):
        super().__init__(message)
        self.pairs = pairs if pairs is not None else []
        self.report = report


class EmptyGroup(VoxsynthError):
    """A summary was requested over an empty group of ratings."""


class DegenerateDesign(VoxsynthError):
    """ANOVA factors are confounded or leave no residual degrees of freedom."""


class IncompleteMatrix(VoxsynthError):
    """The rating matrix has missing cells and listwise deletion was not enabled."""


class InsufficientData(VoxsynthError):
    """Not enough data to satisfy the requested operation."""

    def __init__(self, message: str, deficit: float | None = None):
        super().__init__(message)
        self.deficit = deficit


class ZeroSignal(VoxsynthError):
    """The signal has zero power and cannot be levelled or mixed."""


class ZeroNoise(VoxsynthError):
    """The noise clip has zero power and cannot be scaled to a target SNR."""


class UnsplittableGroup(VoxsynthError):
    """A speaker/transcript-linked group exceeds the largest split target."""

    def __init__(self, message: str, speakers=(), transcripts=()):
        super().__init__(message)
        self.speakers = sorted(speakers)
        self.transcripts = sorted(transcripts)


class SplitToleranceError(VoxsynthError):
    """Greedy packing could not land every split within tolerance of target."""


class EmptyReference(VoxsynthError):
    """The reference token stream is empty; error rates are undefined."""


class NotFound(VoxsynthError):
    """Unknown study, rater, or item."""


class ValidationError(VoxsynthError):
    """A rating record violates its invariants; ``fields`` names the offenders."""

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = fields or []


class IoError(VoxsynthError):
    """A declared output path could not be written."""


class ConfigError(VoxsynthError):
    """A run configuration is missing a key or holds an invalid value."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
