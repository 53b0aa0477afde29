"""Exception types raised across the package."""

import numpy as np


class WindowError(ValueError):
    """A Hankel window does not fit inside the record."""


class ShapeError(ValueError):
    """An array does not have the shape an operator expects."""


class SingularInputError(np.linalg.LinAlgError):
    """A matrix that must have full row rank does not."""


class SingularWeightError(np.linalg.LinAlgError):
    """A Gram matrix that is inverted (or inverse-square-rooted) is degenerate."""


class ConditioningError(np.linalg.LinAlgError):
    """A least-squares system is too ill-conditioned to trust."""


class DegenerateSpectrumError(ValueError):
    """A singular value spectrum is identically zero."""


class DataFormatError(ValueError):
    """A data or model file could not be parsed."""
