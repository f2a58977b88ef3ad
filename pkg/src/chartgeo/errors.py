"""Exception hierarchy shared by every chartgeo module."""


class GeometryError(Exception):
    """Base class for all chartgeo failures."""


class SingularMatrix(GeometryError):
    pass


class NonFiniteSample(GeometryError):
    pass


class InvalidDimension(GeometryError, ValueError):
    pass


class UnknownChart(GeometryError, KeyError):
    pass


class OutsideOverlap(GeometryError, ValueError):
    pass


class AtlasMismatch(GeometryError, ValueError):
    pass


class MissingEmbedding(GeometryError):
    pass


class DegenerateMetric(GeometryError):
    pass


class StencilOutOfDomain(GeometryError):
    pass


class ZeroVelocity(GeometryError):
    pass


class InsufficientSamples(GeometryError, ValueError):
    pass


class ChartExit(GeometryError):
    pass


class NoConvergence(GeometryError):
    """Raised by the shooting solver; ``best_residual`` holds the smallest
    endpoint mismatch seen over all starts."""

    def __init__(self, message, best_residual=float("inf")):
        super().__init__(message)
        self.best_residual = best_residual
