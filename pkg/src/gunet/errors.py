"""Exception types shared across the package."""


class GunetError(Exception):
    """Base class for all package errors."""


class ShapeError(GunetError, ValueError):
    """An operand has an incompatible shape; the message names the dimensions."""


class ImageFormatError(GunetError, ValueError):
    """A file on disk is not a well-formed PPM/PGM/PFM image."""


class NumericsError(GunetError, ArithmeticError):
    """A computation produced non-finite values or hit a forbidden degeneracy."""
