"""Exception hierarchy shared by the whole package.

The CLI maps these onto process exit codes: validation problems exit 1,
data problems exit 2, numeric failures exit 3.
"""


class CKDError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CKDError):
    """Invalid sizes, parameters, or configuration."""


class DegenerateConfigError(ValidationError):
    """Every objective term has zero weight; any basis would be 'optimal'."""


class DataError(CKDError):
    """Problems with dataset files or their contents."""


class UnlabeledSampleError(DataError):
    """A sample carries no label at all; similarity to it is undefined."""


class NumericError(CKDError):
    """Non-finite values or a failed matrix decomposition."""
