"""Exception hierarchy shared by all planvec modules."""


class PlanvecError(Exception):
    """Base class for all errors raised by this package."""


class UnknownColor(PlanvecError):
    """A raster pixel is not within tolerance of any palette color."""


class AmbiguousColor(PlanvecError):
    """A raster pixel is within tolerance of two or more palette colors."""


class EmptyClassSet(PlanvecError):
    """An operation that needs at least one class received none."""


class MalformedDocument(PlanvecError):
    """An input document (XML annotation, polygon file) could not be parsed."""


class UnparseableGeometry(PlanvecError):
    """An annotation element was recognized but its geometry is invalid."""


class ZeroAreaCanvas(PlanvecError):
    """Rasterization target has zero width or height."""


class NonPositiveBeta(PlanvecError):
    """Heatmap spread parameters must be strictly positive."""


class DimensionMismatch(PlanvecError):
    """Two grids that must share a shape do not."""


class EmptyPointSet(PlanvecError):
    """A geometric operation received no points."""


class ZeroAreaRect(PlanvecError):
    """A fitting score was requested for a rectangle with zero area."""


class DegenerateSplit(PlanvecError):
    """A component cannot be split into two non-empty halves."""


class SelfIntersectingPolygon(PlanvecError):
    """A polygon scheduled for extrusion intersects itself."""


class ChannelMismatch(PlanvecError):
    """Tensor channel count does not match the kernel or weights."""


class OddChannels(PlanvecError):
    """Channel attention requires an even channel count."""


class IndivisibleGroups(PlanvecError):
    """Group normalization requires channels divisible by the group count."""


class EmptyCrop(PlanvecError):
    """An augmentation crop or scale would produce zero pixels."""


class ConfigError(PlanvecError):
    """A configuration file or override contains an unknown key or bad value."""
