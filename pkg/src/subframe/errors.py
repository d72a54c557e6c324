"""Exception hierarchy. Each class carries the CLI exit code of its failure class."""


class SubframeError(Exception):
    exit_code = 1


class ConfigError(SubframeError, ValueError):
    exit_code = 2


class CapacityError(SubframeError, ValueError):
    """A basis, grid or mesh is too small (or too large) for the request."""

    exit_code = 3


class BandTruncationError(CapacityError):
    """The basis cannot hold the full requested band."""


class ResolutionError(CapacityError):
    """A radius is too small relative to the mesh spacing."""


class InfeasibleError(SubframeError, RuntimeError):
    """Cubature weights could not be found.

    ``history`` holds one ``(r, residual, min_weight)`` tuple per attempt.
    """

    exit_code = 4

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class ArtifactError(SubframeError, OSError):
    exit_code = 5


class ResolutionWarning(UserWarning):
    pass


class IncompleteGeometryError(SubframeError, ValueError):
    """A ball volume needed by a sequence norm is missing."""
