"""Exception types shared across the package."""


class QmstError(Exception):
    """Base class for package errors."""


class DataError(QmstError):
    """Malformed or inconsistent input data (CLI exit code 3)."""


class DegeneracyError(QmstError):
    """Numeric degeneracy: constant series, zero variance, defective
    correlation values (CLI exit code 4)."""
