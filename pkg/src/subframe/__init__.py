"""Parseval frames for the sub-Laplacian of the 2-sphere: spectral bases, CC geometry,
lattices, positive cubature, frame atoms and Besov norms."""

from .errors import (
    ArtifactError,
    BandTruncationError,
    CapacityError,
    ConfigError,
    InfeasibleError,
    ResolutionError,
    ResolutionWarning,
    SubframeError,
)
from .spectral import BandFunction, QuadratureGrid, SpectralBasis

__version__ = "0.1.0"
