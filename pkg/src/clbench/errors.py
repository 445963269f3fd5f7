"""Exception types shared across the toolkit.

Every error raised by this package derives from ``ToolkitError`` so callers
can catch one base class at process boundaries (the CLI maps them to exit
code 1).
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ToolkitError):
    """A file could not be parsed; the message carries line/field context."""


class InvariantViolation(ToolkitError):
    """A data-model invariant does not hold (dangling id, bad norm, ...)."""


class BehindCamera(ToolkitError):
    """Projection requested for a point with non-positive camera-frame z."""


class NonPositiveDepth(ToolkitError):
    """Unprojection requested with depth <= 0."""


class EmptyTrack(ToolkitError):
    """Pose interpolation requested on an empty track."""


class OutOfRange(ToolkitError):
    """Timestamp outside the pose-track span."""


class PoseOutOfRange(OutOfRange):
    """Frame timestamp not covered by the pose track during labeling."""


class ConfigMismatch(ToolkitError):
    """Camera / grid configuration disagree (image size, scale factor...)."""


class PixelOutOfBounds(ToolkitError):
    """Pixel handed to the quantizer lies outside the half-open image box."""


class ShapeMismatch(ToolkitError):
    """Tensor or grid shapes disagree with the declared configuration."""


class GridMismatch(ToolkitError):
    """Ground truth and predictions use different grid dimensions."""


class UnsupportedLayout(ToolkitError):
    """Unknown procedural scene layout."""


class BadMagic(ParseError):
    """Tensor container does not start with the expected magic bytes."""


class UnsupportedVersion(ParseError):
    """Tensor container version not understood by this reader."""


class TruncatedPayload(ParseError):
    """Tensor container ends before the declared payload is complete."""


class DimOverflow(ParseError):
    """Tensor rank/dims outside the supported range."""
