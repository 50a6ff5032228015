class CrossviewError(Exception):
    """
    Base class for every error raised by crossview
    """


class ConfigError(CrossviewError, ValueError):
    pass


class DimensionTooSmallError(CrossviewError, ValueError):
    """
    Raised when an image is too small for a crop

    Args:
        axis (str): "height" or "width"\n
        size (int): Actual size along the axis\n
        required (int): Minimum size along the axis
    """

    def __init__(self, axis: str, size: int, required: int) -> None:
        self.axis = axis
        self.size = size
        self.required = required
        super().__init__(f"image {axis} {size} is smaller than the required {required}")


class RangeViolationError(CrossviewError, ValueError):
    pass


class InvalidSizeError(CrossviewError, ValueError):
    pass


class ShapeMismatchError(CrossviewError, ValueError):
    pass


class DegenerateSizeError(CrossviewError, ValueError):
    pass


class PaletteError(CrossviewError, ValueError):
    pass


class ManifestError(CrossviewError, ValueError):
    pass


class SpecError(CrossviewError, ValueError):
    pass


class ResolutionMismatchError(CrossviewError, ValueError):
    pass


class MissingStageError(CrossviewError, ValueError):
    pass


class EmptySetError(CrossviewError, ValueError):
    pass


class CheckpointMismatchError(CrossviewError, ValueError):
    pass


class CheckpointIOError(CrossviewError, OSError):
    pass


class NonFiniteLossError(CrossviewError, RuntimeError):
    pass


class OracleRejectedError(CrossviewError, RuntimeError):
    pass
