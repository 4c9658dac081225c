"""Exception types raised across the facade texturing pipeline."""


class FacadetexError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(FacadetexError, ValueError):
    """An argument violates a documented precondition."""


class ParseError(FacadetexError):
    """Malformed input document (carries line/column/offset when known)."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class GeometryError(FacadetexError):
    """Invalid geometry in an input document."""


class MissingSurfaceError(FacadetexError):
    """A building lacks the surface kind required by the operation."""


class OutOfDomainError(FacadetexError):
    """Coordinates outside the validity domain of the projection series."""


class CrsError(FacadetexError):
    """Geometry tagged with the wrong coordinate reference system."""


class DegenerateGeometryError(FacadetexError):
    """Point set or polygon has too little rank/area for the operation."""


class NonPlanarFacadeError(FacadetexError):
    """Hit faces spread beyond the planarity threshold."""


class NoVisibleFacadeError(FacadetexError):
    """No candidate camera pose produced any ray hit."""


class FullyOccludedError(FacadetexError):
    """Every boundary sample of the target footprint is occluded."""


class SingularAttitudeError(FacadetexError):
    """Zenith direction leaves pitch/roll undefined."""


class InsufficientEvidenceError(FacadetexError):
    """Too few usable line segments to estimate a zenith."""


class EmptyMaskError(FacadetexError):
    """A binary mask required to be non-empty has no true pixels."""


class ManifestError(FacadetexError):
    """Mask manifest entry is missing, malformed, or inconsistent."""

    def __init__(self, message, entry_index=None):
        super().__init__(message)
        self.entry_index = entry_index


class InsufficientMatchesError(FacadetexError):
    """Fewer point pairs than the minimal sample size."""


class NoModelError(FacadetexError):
    """RANSAC found no model with enough inliers."""


class DegenerateViewError(FacadetexError):
    """Camera position degenerate with respect to the facade plane."""


class ConfigError(FacadetexError):
    """Configuration file contains unknown keys or out-of-range values."""
