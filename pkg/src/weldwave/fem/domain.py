"""Problem-class domain description shared by the 2D and 3D solvers."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

IN_TO_M = 0.0254


class BCClass(str, Enum):
    """The three inspection boundary-condition classes."""

    Scattering = "scattering"   # PML in x and y (unbounded plate)
    Periodic = "periodic"       # periodic in x, PML in y (pipe)
    FreeFree = "coupon"         # fully reflective (small coupon)


@dataclass(frozen=True)
class DomainSpec:
    Lx: float                  # m, total extent including PML strips
    Ly: float
    thickness: float           # m, full plate thickness H
    bc_class: BCClass
    pml_width_x: float = 0.0   # m
    pml_width_y: float = 0.0
    elements_per_wavelength: int = 6

    def __post_init__(self):
        if self.elements_per_wavelength < 6:
            raise ValueError("need at least 6 elements per wavelength")
        if self.bc_class == BCClass.Scattering:
            if not (self.pml_width_x > 0 and self.pml_width_x == self.pml_width_y):
                raise ValueError("scattering class needs equal positive PML widths")
        elif self.bc_class == BCClass.Periodic:
            if not (self.pml_width_x == 0 and self.pml_width_y > 0):
                raise ValueError("periodic class needs PML in y only")
        else:
            if self.pml_width_x != 0 or self.pml_width_y != 0:
                raise ValueError("free-free class must not carry PML")

    @property
    def periodic_x(self) -> bool:
        return self.bc_class == BCClass.Periodic

    @property
    def interior(self):
        """(x0, x1, y0, y1) bounds of the physical (non-PML) region."""
        return (self.pml_width_x, self.Lx - self.pml_width_x,
                self.pml_width_y, self.Ly - self.pml_width_y)


def pml_width_for(k_max: float, wavelengths: float = 3.0) -> float:
    """PML depth covering `wavelengths` of the highest-wavenumber mode."""
    return wavelengths * 2 * np.pi / k_max


def domain_for_class(bc_class: BCClass, k_max: float, interior_x: float,
                     interior_y: float, thickness: float,
                     elements_per_wavelength: int = 6) -> DomainSpec:
    """DomainSpec with PML strips added around the stated interior extents."""
    bc_class = BCClass(bc_class)
    chi = pml_width_for(k_max)
    if bc_class == BCClass.Scattering:
        return DomainSpec(interior_x + 2 * chi, interior_y + 2 * chi, thickness,
                          bc_class, chi, chi, elements_per_wavelength)
    if bc_class == BCClass.Periodic:
        return DomainSpec(interior_x, interior_y + 2 * chi, thickness,
                          bc_class, 0.0, chi, elements_per_wavelength)
    return DomainSpec(interior_x, interior_y, thickness, bc_class,
                      0.0, 0.0, elements_per_wavelength)
