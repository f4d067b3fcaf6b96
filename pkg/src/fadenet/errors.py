"""Exception hierarchy shared across the package.

Grouped by failure class so the CLI can map them onto distinct exit codes:
configuration/validation problems, data/file problems, and numeric/training
problems.
"""


class FadenetError(Exception):
    """Base class for all package errors."""


# --- configuration / validation -------------------------------------------

class ValidationError(FadenetError):
    """A value violates a documented precondition or type invariant."""


class DomainError(ValidationError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValidationError):
    """A run configuration is missing, malformed, or internally inconsistent."""


# --- data / file ------------------------------------------------------------

class DataFormatError(FadenetError):
    """Base class for persisted-file problems."""


class VersionError(DataFormatError):
    """File declares a format version this build does not support."""


class TruncationError(DataFormatError):
    """File ends before the declared payload is complete."""


class ChecksumError(DataFormatError):
    """Stored checksum does not match the payload."""


class FingerprintMismatchError(DataFormatError):
    """A config or dataset fingerprint does not match the expected one."""


# --- numeric / training -----------------------------------------------------

class NumericError(FadenetError):
    """An iterative numeric procedure failed to converge or went non-finite."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class TrainingError(NumericError):
    """Training aborted (non-finite loss or gradient), with location context."""


class MetricError(FadenetError):
    """A metric is undefined for the given inputs (e.g. percent error at 0)."""
