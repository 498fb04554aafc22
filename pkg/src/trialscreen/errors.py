"""Exception types raised across the screening pipeline.

Everything inherits from :class:`TrialScreenError` so callers (and the CLI)
can catch pipeline failures without swallowing programming errors. Plain
``OSError`` is left alone for file-system trouble.
"""

from __future__ import annotations


class TrialScreenError(Exception):
    """Base class for all pipeline errors."""


class MalformedIdError(TrialScreenError):
    """Registry id does not look like NCT followed by eight digits."""


class SchemaError(TrialScreenError):
    """A study document is missing required structure."""


class MissingEligibilityError(SchemaError):
    """A study document has no usable eligibility text."""


class NotFoundError(TrialScreenError):
    """The registry does not know the requested study."""


class RateLimitedError(TrialScreenError):
    """The registry kept answering 429 after retries."""


class TransportError(TrialScreenError):
    """Network-level failure talking to a remote service."""


class CorpusParseError(TrialScreenError):
    """A persisted corpus file contains a bad line.

    Carries the 1-based line number so the offending record can be found.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class KeyMismatchError(TrialScreenError):
    """Two label maps that must cover the same keys do not."""


class DegenerateMarginalsError(TrialScreenError):
    """Chance agreement is 1, so kappa is undefined."""


class UnresolvedConflictError(TrialScreenError):
    """Annotators disagree on keys with no adjudicated resolution."""


class EmptyGoldError(TrialScreenError):
    """Recall requested against an empty gold set."""


class EmptyCorpusError(TrialScreenError):
    """Feature fitting was given no documents."""


class SingleClassError(TrialScreenError):
    """Training labels contain only one class."""


class EmptyDatasetError(TrialScreenError):
    """Training was given no examples."""


class EmptyMatrixError(TrialScreenError):
    """Metrics requested on a confusion matrix with no observations."""


class TooFewTrialsError(TrialScreenError):
    """Not enough trials to populate the requested split."""


class ProtocolError(TrialScreenError):
    """A remote backend answered outside its wire contract."""


class BackendError(TrialScreenError):
    """A remote backend reported a structured failure."""

    def __init__(self, message: str, code: str | None = None, status: int | None = None):
        super().__init__(message)
        self.code = code
        self.status = status


class ConfigError(TrialScreenError):
    """A run configuration is invalid or inconsistent with the command."""
