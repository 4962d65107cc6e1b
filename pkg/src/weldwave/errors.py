"""Exception types shared across the toolkit."""


class WeldwaveError(Exception):
    """Base class for all toolkit errors."""


class InvalidFrequency(WeldwaveError):
    """Nonpositive or otherwise unusable excitation frequency."""


class ConvergenceFailure(WeldwaveError):
    """A bracketed root failed to converge below tolerance."""


class ModeCutoff(WeldwaveError):
    """Requested mode does not propagate at the requested frequency."""


class DegenerateForce(WeldwaveError):
    """Surface force projects to zero on every mode."""


class DomainTooSmall(WeldwaveError):
    """Weld support exceeds the computational domain."""


class MeshTooLarge(WeldwaveError):
    """Requested discretization exceeds the configured node cap."""


class SingularCoefficient(WeldwaveError):
    """Wavespeed coefficient nonpositive at a quadrature point."""


class SingularMaterial(WeldwaveError):
    """Nonpositive Lame parameter encountered."""


class FactorizationFailure(WeldwaveError):
    """Sparse direct factorization failed or matrix is near singular."""

    def __init__(self, message, rcond_estimate=None):
        super().__init__(message)
        self.rcond_estimate = rcond_estimate


class MeshMismatch(WeldwaveError):
    """Fields to combine do not share a mesh."""


class OutOfBounds(WeldwaveError):
    """Resampling target lies outside the source field bounds."""


class Unresolvable(WeldwaveError):
    """Filter center wavenumber beyond the grid Nyquist limit."""


class MissingMode(WeldwaveError):
    """Dispersion table lacks a mode required downstream."""


class ShapeMismatch(WeldwaveError):
    """Paired grids have incompatible shapes."""


class CorruptFile(WeldwaveError):
    """Sample file failed magic/version/checksum validation."""
