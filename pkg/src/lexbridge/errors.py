"""Exception hierarchy shared across the package.

Every error raised on purpose derives from :class:`LexBridgeError` so the CLI
can turn any of them into a one-line machine-parsable message and exit 1.
"""


class LexBridgeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(LexBridgeError, ValueError):
    """An input violated a documented invariant."""


class DimensionMismatchError(ValidationError):
    """Operands disagree on vector/matrix dimensions."""


class NonFiniteError(ValidationError):
    """A value that must be finite is NaN or infinite."""


class TensorFileError(LexBridgeError):
    """Base class for tensor container format violations."""


class BadMagicError(TensorFileError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(TensorFileError):
    """File declares an unsupported container version."""


class TruncatedPayloadError(TensorFileError):
    """Payload is shorter than the declared dimensions imply."""


class CorpusFormatError(LexBridgeError):
    """A corpus / queries / qrels / run file is malformed."""


class DuplicateIdError(CorpusFormatError):
    """An identifier that must be unique appeared twice."""


class InsufficientCandidatesError(LexBridgeError):
    """The hard-negative window holds fewer candidates than requested."""
