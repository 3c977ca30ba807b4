"""Exception hierarchy shared by every module."""


class SeqprintError(Exception):
    """Base class for all library errors."""

    #: process exit status used by the CLI
    exit_code = 2


class InvalidSpecError(SeqprintError, ValueError):
    exit_code = 1


class InvalidArgumentError(SeqprintError, ValueError):
    exit_code = 1


class EmptyWindowError(SeqprintError, ValueError):
    """Pattern length exceeds the sequence, or a profile has no windows."""


class IncompatibleProfileError(SeqprintError, ValueError):
    pass


class IncompatibleFingerprintError(SeqprintError, ValueError):
    pass


class IncompatibleAnalysisError(SeqprintError, ValueError):
    pass


class CorpusFormatError(SeqprintError):
    """Bad magic, version or truncated payload in an on-disk file."""
