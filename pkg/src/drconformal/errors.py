"""Exception types raised across the package."""


class GeometryError(ValueError):
    """Base class for all errors raised by drconformal."""


class DimensionMismatch(GeometryError):
    pass


class NotSkew(GeometryError):
    pass


class CliffordViolation(GeometryError):
    pass


class UnsupportedFamily(GeometryError):
    pass


class NotUnit(GeometryError):
    pass


class NonFinitePoint(GeometryError):
    pass


class NonFiniteEvaluation(GeometryError):
    pass


class BasisNotAligned(GeometryError):
    pass


class SingularMetric(GeometryError):
    pass


class ShapeMismatch(GeometryError):
    pass


class ChartPole(GeometryError):
    pass


class NonPositiveY(GeometryError):
    pass


class NonPositiveW(GeometryError):
    pass


class Overflow(GeometryError):
    pass


class TruncationTooSmall(GeometryError):
    pass


class IllConditionedBasis(GeometryError):
    pass


class InsufficientSampling(GeometryError):
    pass


class InconclusiveSampling(GeometryError):
    pass
