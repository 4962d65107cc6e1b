"""Lamb-mode dispersion: root finding, mode shapes, and modal amplitudes.

The propagating modes of a traction-free plate satisfy transcendental
characteristic equations in (omega, k).  Both characteristics are evaluated
here in a cleared-denominator form that is real-analytic in k^2, so a single
real scan-and-bisect pass finds every propagating root without branch
switching between trigonometric and hyperbolic regimes.

With a2 = omega^2/cL^2 - k^2 and b2 = omega^2/cT^2 - k^2, and writing
C(x2) = cos(x h) (or cosh for negative x2) and S(x2) = sin(x h)/x (or
sinh(x h)/x), the symmetric and antisymmetric characteristics are

    GS(k) = (k^2 - b2)^2 C(a2) S(b2) + 4 k^2 a2 S(a2) C(b2)
    GA(k) = (k^2 - b2)^2 S(a2) C(b2) + 4 k^2 b2 C(a2) S(b2)

which are the classical Rayleigh-Lamb forms with the odd factors divided out.
Residuals are reported normalized by the larger of the two terms so the
tolerance is scale-free.
"""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ConvergenceFailure, DegenerateForce, InvalidFrequency, ModeCutoff
from .materials import Material

RESIDUAL_TOL = 1e-9
_N_SCAN = 16384
_BISECT_REL = 1e-12


class Symmetry(str, Enum):
    S = "S"
    A = "A"


@dataclass(frozen=True)
class LambMode:
    symmetry: Symmetry
    order: int
    omega: float        # rad/s
    half_thickness: float  # m
    k: float            # rad/m
    vp: float           # m/s
    vg: float           # m/s

    @property
    def fd_mhz_mm(self) -> float:
        """Frequency-thickness product in MHz*mm (full plate thickness)."""
        return self.omega / (2 * np.pi) * 2 * self.half_thickness * 1e-3


@dataclass(frozen=True)
class ModeShape:
    z_samples: np.ndarray   # in [-h, h]
    ux: np.ndarray          # complex, peak-normalized jointly with uz
    uz: np.ndarray


@dataclass(frozen=True)
class SurfaceForce:
    """z-directed surface traction amplitude profile F(x,y).

    kind 'gaussian': isotropic unit-integral Gaussian of standard deviation
    `radius` scaled by `amplitude`; kind 'point': ideal point force.  The
    spatial transform magnitude at radial wavenumber k is analytic for both.
    """

    kind: str = "point"           # 'point' | 'gaussian'
    center: tuple = (0.0, 0.0)    # m
    radius: float = 0.0           # m (std of the Gaussian)
    amplitude: float = 1.0

    def transform_mag(self, k: float) -> float:
        if self.kind == "point":
            return abs(self.amplitude)
        if self.kind == "gaussian":
            return abs(self.amplitude) * float(np.exp(-0.5 * (k * self.radius) ** 2))
        raise ValueError(f"unknown force kind {self.kind!r}")


@dataclass
class DispersionTable:
    material: Material
    omega: float
    h: float
    modes: list = field(default_factory=list)       # LambMode, sorted by descending k
    amplitudes: dict = field(default_factory=dict)  # (symmetry, order) -> A

    def mode(self, symmetry, order: int) -> LambMode:
        sym = Symmetry(symmetry)
        for m in self.modes:
            if m.symmetry == sym and m.order == order:
                return m
        raise ModeCutoff(f"mode ({sym.value},{order}) not present at omega={self.omega:g}")


def _cos_even(x2, h):
    """cos(sqrt(x2) h), continued as cosh for negative argument."""
    x2 = np.asarray(x2, dtype=float)
    out = np.empty_like(x2)
    pos = x2 >= 0
    out[pos] = np.cos(np.sqrt(x2[pos]) * h)
    out[~pos] = np.cosh(np.sqrt(-x2[~pos]) * h)
    return out


def _sinc_even(x2, h):
    """sin(sqrt(x2) h)/sqrt(x2), continued through 0 and negative argument."""
    x2 = np.asarray(x2, dtype=float)
    out = np.empty_like(x2)
    small = np.abs(x2) * h * h < 1e-24
    pos = (x2 > 0) & ~small
    neg = (x2 < 0) & ~small
    xp = np.sqrt(x2[pos])
    out[pos] = np.sin(xp * h) / xp
    xn = np.sqrt(-x2[neg])
    out[neg] = np.sinh(xn * h) / xn
    out[small] = h
    return out


def _char_terms(k, omega, material, h, symmetry):
    """The two additive terms of the cleared characteristic for given symmetry."""
    k = np.asarray(k, dtype=float)
    k2 = k * k
    a2 = (omega / material.cL) ** 2 - k2
    b2 = (omega / material.cT) ** 2 - k2
    if Symmetry(symmetry) == Symmetry.S:
        t1 = (k2 - b2) ** 2 * _cos_even(a2, h) * _sinc_even(b2, h)
        t2 = 4.0 * k2 * a2 * _sinc_even(a2, h) * _cos_even(b2, h)
    else:
        t1 = (k2 - b2) ** 2 * _sinc_even(a2, h) * _cos_even(b2, h)
        t2 = 4.0 * k2 * b2 * _cos_even(a2, h) * _sinc_even(b2, h)
    return t1, t2


def characteristic(k, omega, material, h, symmetry):
    t1, t2 = _char_terms(k, omega, material, h, symmetry)
    return t1 + t2


def residual(k, omega, material, h, symmetry) -> float:
    """Scale-free characteristic residual at (omega, k)."""
    t1, t2 = _char_terms(k, omega, material, h, symmetry)
    scale = max(abs(float(t1)), abs(float(t2)), 1e-300)
    return abs(float(t1 + t2)) / scale


def _k_scan_max(material: Material, omega: float, h: float) -> float:
    """Upper bound of the root scan.

    The fundamental antisymmetric branch always lies below the Rayleigh
    asymptote in phase velocity, i.e. above omega/cR in wavenumber, and at
    low frequency-thickness it follows the plate-bending wavenumber
    ~ sqrt(omega) (3 rho (1-nu^2)/E)^(1/4) / sqrt(h).  The sum of both
    estimates with margin bounds every propagating root.
    """
    k_ray = omega / material.c_rayleigh_est
    k_bend = np.sqrt(omega) * (3 * material.rho * (1 - material.nu**2) / material.E0) ** 0.25 / np.sqrt(h)
    return 1.05 * k_ray + 2.0 * k_bend


def _bisect_roots(f, k_lo, k_hi):
    """Vectorized bisection over bracketed sign changes (arrays of brackets).

    Runs to float resolution: steep characteristics (e.g. near close root
    pairs) need the full mantissa for the residual tolerance to be met.
    """
    lo = np.array(k_lo, dtype=float)
    hi = np.array(k_hi, dtype=float)
    flo = f(lo)
    converged = False
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        done = (mid <= lo) | (mid >= hi)
        if np.all(done):
            converged = True
            break
        fm = f(mid)
        take_lo = np.sign(fm) == np.sign(flo)
        lo = np.where(take_lo & ~done, mid, lo)
        flo = np.where(take_lo & ~done, fm, flo)
        hi = np.where(~take_lo & ~done, mid, hi)
    if not converged and np.any((hi - lo) > _BISECT_REL * hi):
        raise ConvergenceFailure("bisection failed to reach relative bracket width 1e-12")
    # pick the endpoint with the smaller characteristic magnitude
    fhi = f(hi)
    flo = f(lo)
    return np.where(np.abs(flo) <= np.abs(fhi), lo, hi)


def _roots_one_symmetry(material, omega, h, symmetry, n_scan=_N_SCAN):
    kmax = _k_scan_max(material, omega, h)
    ks = np.linspace(kmax / n_scan, kmax, n_scan)
    g = characteristic(ks, omega, material, h, symmetry)
    s = np.sign(g)
    # exact zeros on grid points count as roots directly
    exact = np.where(g == 0.0)[0]
    flips = np.where(s[:-1] * s[1:] < 0)[0]
    if len(flips) == 0 and len(exact) == 0:
        return np.empty(0)
    roots = _bisect_roots(
        lambda k: characteristic(k, omega, material, h, symmetry), ks[flips], ks[flips + 1]
    ) if len(flips) else np.empty(0)
    roots = np.concatenate([roots, ks[exact]])
    roots.sort()
    return roots


def find_modes(material: Material, omega: float, h: float, max_order: int = 5,
               group_velocities: bool = True) -> list:
    """All real propagating Lamb modes at angular frequency omega.

    Modes are labeled (symmetry, order) with order counted by descending
    wavenumber (equivalently ascending cut-on), and carry phase and group
    velocity (vg left NaN when group_velocities=False, e.g. for count-only
    scans).  Raises InvalidFrequency for omega <= 0 and ConvergenceFailure if
    a bracketed root cannot be refined below tolerance.
    """
    if omega <= 0:
        raise InvalidFrequency(f"omega must be positive, got {omega}")
    if h <= 0:
        raise ValueError(f"half thickness must be positive, got {h}")
    modes = []
    for sym in (Symmetry.A, Symmetry.S):
        roots = _roots_one_symmetry(material, omega, h, sym)
        for order, k in enumerate(sorted(roots, reverse=True)):
            if order > max_order:
                break
            res = residual(k, omega, material, h, sym)
            if res >= RESIDUAL_TOL:
                raise ConvergenceFailure(
                    f"root k={k:g} for ({sym.value},{order}) has residual {res:g}"
                )
            vg = _group_velocity_at(material, omega, h, sym, k) if group_velocities else float("nan")
            modes.append(LambMode(symmetry=sym, order=order, omega=omega,
                                  half_thickness=h, k=float(k),
                                  vp=float(omega / k), vg=vg))
    modes.sort(key=lambda m: -m.k)
    return modes


def _root_near(material, omega, h, symmetry, k_guess):
    """Root of the characteristic at a perturbed frequency, nearest a guess.

    Expands a bracket around k_guess; the dispersion branches vary smoothly
    with omega so small frequency perturbations keep the root close.
    """
    f = lambda k: characteristic(np.atleast_1d(k), omega, material, h, symmetry)[0]
    for width in (1e-4, 1e-3, 1e-2, 5e-2, 2e-1):
        lo, hi = k_guess * (1 - width), k_guess * (1 + width)
        if lo <= 0:
            break
        if f(lo) * f(hi) < 0:
            r = _bisect_roots(lambda k: characteristic(k, omega, material, h, symmetry),
                              [lo], [hi])
            return float(r[0])
    # fall back to a full scan and take the nearest root
    roots = _roots_one_symmetry(material, omega, h, symmetry)
    if len(roots) == 0:
        raise ModeCutoff(f"no ({Symmetry(symmetry).value}) roots at omega={omega:g}")
    return float(roots[np.argmin(np.abs(roots - k_guess))])


def _group_velocity_at(material, omega, h, symmetry, k, rel_delta=1e-4):
    """Central-difference group velocity d(omega)/dk along a branch."""
    d = omega * rel_delta
    k_hi = _root_near(material, omega + d, h, symmetry, k)
    k_lo = _root_near(material, omega - d, h, symmetry, k)
    dk = k_hi - k_lo
    if dk == 0:
        raise ConvergenceFailure("degenerate group-velocity stencil")
    return float(2 * d / dk)


def group_velocity(material: Material, symmetry, order: int, omega: float, h: float,
                   delta_omega: float) -> float:
    """Central-difference group velocity for a labeled mode.

    Requires the mode to propagate at omega +/- delta_omega; raises
    ModeCutoff otherwise.
    """
    sym = Symmetry(symmetry)

    def k_of(w):
        for m in find_modes(material, w, h, max_order=max(order, 5)):
            if m.symmetry == sym and m.order == order:
                return m.k
        raise ModeCutoff(f"mode ({sym.value},{order}) absent at omega={w:g}")

    k_hi = k_of(omega + delta_omega)
    k_lo = k_of(omega - delta_omega)
    return float(2 * delta_omega / (k_hi - k_lo))


def _shape_coefficients(material, mode):
    """Partial-wave amplitude ratio (A=1, B) from the traction-free conditions.

    Two equivalent expressions exist (from the shear and normal traction
    conditions); the one with the better-conditioned denominator is used.
    """
    w, k, h = mode.omega, mode.k, mode.half_thickness
    alpha = np.sqrt(complex((w / material.cL) ** 2 - k * k))
    beta = np.sqrt(complex((w / material.cT) ** 2 - k * k))
    k2, b2 = k * k, beta * beta
    if mode.symmetry == Symmetry.S:
        den_shear = (b2 - k2) * np.sin(beta * h)
        den_norm = 2j * k * beta * np.cos(beta * h)
        num_shear = 2j * k * alpha * np.sin(alpha * h)
        num_norm = (b2 - k2) * np.cos(alpha * h)
    else:
        den_shear = (b2 - k2) * np.cos(beta * h)
        den_norm = 2j * k * beta * np.sin(beta * h)
        num_shear = -2j * k * alpha * np.cos(alpha * h)
        num_norm = -(b2 - k2) * np.sin(alpha * h)
    if abs(den_shear) >= abs(den_norm):
        B = num_shear / den_shear
    else:
        B = num_norm / den_norm
    return alpha, beta, B


def mode_shape(material: Material, mode: LambMode, nz: int) -> ModeShape:
    """Through-thickness displacement profile (ux, uz) of a propagating mode.

    Peak-normalized so max sqrt(|ux|^2 + |uz|^2) = 1.  Symmetric modes have
    even ux and odd uz in z; antisymmetric modes the reverse.
    """
    if nz < 3:
        raise ValueError("nz must be at least 3")
    h, k = mode.half_thickness, mode.k
    alpha, beta, B = _shape_coefficients(material, mode)
    z = np.linspace(-h, h, nz)
    if mode.symmetry == Symmetry.S:
        ux = 1j * k * np.cos(alpha * z) - beta * B * np.cos(beta * z)
        uz = -alpha * np.sin(alpha * z) + 1j * k * B * np.sin(beta * z)
    else:
        ux = 1j * k * np.sin(alpha * z) + beta * B * np.sin(beta * z)
        uz = alpha * np.cos(alpha * z) + 1j * k * B * np.cos(beta * z)
    mag = np.sqrt(np.abs(ux) ** 2 + np.abs(uz) ** 2)
    peak = mag.max()
    if peak == 0:
        raise ConvergenceFailure("degenerate mode shape")
    return ModeShape(z_samples=z, ux=ux / peak, uz=uz / peak)


def amplitude_projection(table: DispersionTable, force: SurfaceForce,
                         nz: int = 201) -> DispersionTable:
    """Populate relative modal amplitudes from a z-directed surface force.

    Each unscaled prominence is the product of (i) the magnitude of the
    force projected onto the mode's surface out-of-plane displacement times
    the force profile's spatial transform at the mode wavenumber, and
    (ii) the through-thickness z-polarity ratio of the mode.  Amplitudes are
    returned normalized to unit sum.
    """
    if not table.modes:
        raise ValueError("dispersion table contains no modes")
    raw = {}
    for m in table.modes:
        shape = mode_shape(table.material, m, nz)
        uz_surface = abs(shape.uz[-1])          # z = +h sample
        proj = uz_surface * force.transform_mag(m.k)
        mag = np.sqrt(np.abs(shape.ux) ** 2 + np.abs(shape.uz) ** 2)
        polarity = np.trapezoid(np.abs(shape.uz), shape.z_samples) / np.trapezoid(mag, shape.z_samples)
        raw[(m.symmetry, m.order)] = proj * polarity
    total = sum(raw.values())
    if total <= 0:
        raise DegenerateForce("surface force projects to zero on every mode")
    amplitudes = {key: v / total for key, v in raw.items()}
    return replace(table, amplitudes=amplitudes)


def dispersion_table(material: Material, freq_hz: float, thickness: float,
                     max_order: int = 5, force: SurfaceForce = None) -> DispersionTable:
    """Convenience constructor: find modes at freq_hz for a plate of full
    thickness `thickness`, optionally populating amplitudes."""
    omega = 2 * np.pi * freq_hz
    h = thickness / 2
    table = DispersionTable(material=material, omega=omega, h=h,
                            modes=find_modes(material, omega, h, max_order=max_order))
    if force is not None:
        table = amplitude_projection(table, force)
    return table
