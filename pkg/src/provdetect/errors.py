"""Exception hierarchy shared across the package.

CLI exit codes map onto these classes: input/validation problems exit 2,
embedding-backend problems exit 3, numeric/training failures exit 4.
"""


class ProvdetectError(Exception):
    """Base class for all package errors."""


class ParseError(ProvdetectError):
    """An input file is malformed (bad cell, empty file, truncated record)."""


class ValidationError(ProvdetectError):
    """Inputs are well-formed but violate a semantic contract."""


class EmbeddingError(ProvdetectError):
    """An embedding backend failed to load or run."""


class CacheError(ProvdetectError):
    """An embedding cache file is inconsistent or truncated."""


class TrainingError(ProvdetectError):
    """Training produced a non-finite loss or could not proceed."""
