"""Exception types shared across the toolkit."""


class RgbdPoseError(Exception):
    """Base class for all library errors."""


class ShapeError(RgbdPoseError):
    """Array shapes or lengths are inconsistent with each other."""


class DegenerateMesh(RgbdPoseError):
    """Mesh has too few vertices (or zero extent) for the requested operation."""


class DegenerateConfiguration(RgbdPoseError):
    """Point configuration is rank-deficient (e.g. collinear keypoints)."""


class InsufficientPoints(RgbdPoseError):
    """Fewer usable points than the operation requires."""


class NoForeground(RgbdPoseError):
    """Depth image contains no valid foreground pixel."""


class EmptyInput(RgbdPoseError):
    """An operation that needs at least one element received none."""


class InputError(RgbdPoseError):
    """Inputs are malformed or mutually inconsistent."""


class EmptyResult(RgbdPoseError):
    """A generation step legally produced nothing."""
