"""Exception hierarchy shared across the library."""


class SplineGeomError(Exception):
    """Base class for all library-specific errors."""


class ShapeError(SplineGeomError, ValueError):
    """An input's dimensions do not match the network or dataset."""


class ValidationError(SplineGeomError, ValueError):
    """A value, configuration, or serialized file violates its schema."""


class GeometryError(SplineGeomError, RuntimeError):
    """A geometric primitive received degenerate input."""


class RangeError(SplineGeomError, ValueError):
    """A query point lies outside the domain it must belong to."""


class CapacityError(SplineGeomError, RuntimeError):
    """Subdivision exceeded the configured tile cap.

    Carries partial progress so callers can report how far the run got.
    """

    def __init__(self, message, tile_count=None, layer=None):
        super().__init__(message)
        self.tile_count = tile_count
        self.layer = layer


class DivergenceError(SplineGeomError, RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DegeneratePoolError(SplineGeomError, RuntimeError):
    """Every proposal in a sample pool received zero weight."""


class RegionTooSmallError(SplineGeomError, RuntimeError):
    """No perturbation radius keeps all activation patterns fixed."""
