"""Exception hierarchy shared by every package."""


class RelnError(Exception):
    """Base class for all library errors."""


class ShapeError(RelnError, ValueError):
    """Array shapes do not match what an operation expects."""


class AlgebraError(RelnError, ValueError):
    """Unknown algebra, bad ambient size, or an invalid basis."""


class NotInSpanError(AlgebraError):
    """A matrix is not in the span of the algebra basis."""

    def __init__(self, residual: float, tolerance: float):
        super().__init__(f"matrix not in algebra span: residual {residual:.3e} > tolerance {tolerance:.3e}")
        self.residual = residual
        self.tolerance = tolerance


class ConditioningError(RelnError, ArithmeticError):
    """Numerical input is non-finite, ill-conditioned or not positive-definite."""


class FormError(RelnError, ValueError):
    """Invalid ingredients for a bilinear form."""


class SpecError(RelnError, ValueError):
    """Invalid layer chain."""


class IncompatibleError(RelnError, ValueError):
    """A model and a dataset (or a checkpoint and a config) do not agree."""


class FileFormatError(RelnError, ValueError):
    """A dataset or model file could not be decoded."""


class BadMagicError(FileFormatError):
    pass


class VersionMismatchError(FileFormatError):
    pass


class TruncatedFileError(FileFormatError):
    pass


class ChecksumError(FileFormatError):
    pass
