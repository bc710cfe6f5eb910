"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so every error raised by library code
should derive from :class:`TVSCMError`.
"""


class TVSCMError(Exception):
    """Base class for all package errors."""


class DimensionError(TVSCMError, ValueError):
    """Array shapes do not agree with a layer or operator."""


class SizeError(TVSCMError, ValueError):
    """A requested allocation exceeds a configured guard."""


class NumericsError(TVSCMError, ArithmeticError):
    """A numerical check failed (non-finite value, residual imaginary part...)."""


class DivergenceError(NumericsError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, batch: int, loss: float):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, batch {batch}")


class DataFormatError(TVSCMError, ValueError):
    """Base class for dataset parsing problems."""


class BadMagicError(DataFormatError):
    pass


class TruncatedFileError(DataFormatError):
    pass


class CountMismatchError(DataFormatError):
    pass


class EmptyDatasetError(DataFormatError):
    pass


class ArityError(DataFormatError):
    pass


class LabelRangeError(DataFormatError):
    pass


class NonNumericError(DataFormatError):
    pass
