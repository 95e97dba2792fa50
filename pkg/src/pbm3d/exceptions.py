"""Exception hierarchy.

The CLI maps these onto exit codes: validation problems exit with 2 and
I/O problems with 3.
"""


class PBM3DError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PBM3DError, ValueError):
    """An argument violates a documented precondition."""


class StructuralError(ValidationError):
    """Planes or images have incompatible shapes."""


class SingularTransformError(ValidationError):
    """A channel transform is singular or too badly conditioned to invert."""


class RangeError(ValidationError):
    """Sample values fall outside the range an output format can represent."""


class ImageIOError(PBM3DError, OSError):
    """Base class for file-level failures."""


class MissingFileError(ImageIOError, FileNotFoundError):
    pass


class UnsupportedFormatError(ImageIOError):
    pass


class DimensionMismatchError(ImageIOError):
    """Files that belong together decode to different dimensions."""


class NonConvergenceWarning(UserWarning):
    """Raised as a warning when an optimizer exhausts its budget."""
