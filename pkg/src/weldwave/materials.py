"""Isotropic plate material with derived bulk wavespeeds."""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

IN_TO_M = 0.0254  # exact


@dataclass(frozen=True)
class Material:
    """Homogeneous isotropic material.

    E0 in Pa, rho in kg/m^3, nu dimensionless.  Lame parameters and bulk
    wavespeeds are derived.
    """

    E0: float
    nu: float
    rho: float
    name: str = "unnamed"
    version: int = 0

    def __post_init__(self):
        if not (self.E0 > 0 and self.rho > 0):
            raise ValueError("E0 and rho must be positive")
        if not (0 < self.nu < 0.5):
            raise ValueError("nu must lie in (0, 0.5)")

    @property
    def lam0(self) -> float:
        return self.E0 * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))

    @property
    def mu0(self) -> float:
        return self.E0 / (2 * (1 + self.nu))

    @property
    def cL(self) -> float:
        """Longitudinal bulk wavespeed."""
        return float(np.sqrt((self.lam0 + 2 * self.mu0) / self.rho))

    @property
    def cT(self) -> float:
        """Transverse bulk wavespeed."""
        return float(np.sqrt(self.mu0 / self.rho))

    @property
    def c_rayleigh_est(self) -> float:
        """Standard Rayleigh-speed approximation, used to bound root scans."""
        return self.cT * (0.862 + 1.14 * self.nu) / (1 + self.nu)

    @property
    def plate_speed(self) -> float:
        """Thin-plate longitudinal speed sqrt(E/(rho (1-nu^2)))."""
        return float(np.sqrt(self.E0 / (self.rho * (1 - self.nu**2))))


def load_material(path=None) -> Material:
    """Load a material from a versioned JSON file; default is the bundled steel-like."""
    if path is None:
        text = resources.files("weldwave.data").joinpath("steel_like.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    d = json.loads(text)
    return Material(E0=d["E0"], nu=d["nu"], rho=d["rho"],
                    name=d.get("name", "unnamed"), version=d.get("version", 0))
