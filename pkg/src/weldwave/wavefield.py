"""Uniform-grid wavefield utilities.

Complex steady-state surface fields live on uniform grids (data[j, i] at
(x_i, y_j)).  The 2D spatial transform pair is unnormalized forward /
1/(nx ny) inverse, with wavenumber axes in rad/m.  Mode separation applies a
radial Gaussian in the wavenumber plane whose bandwidth puts the half-power
point midway to the nearest neighboring mode wavenumber.
"""

import json
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.ndimage import gaussian_filter

from .dispersion import DispersionTable
from .errors import (
    MissingMode,
    OutOfBounds,
    ShapeMismatch,
    Unresolvable,
)


class Provenance(str, Enum):
    EM = "EM"
    NL = "NL"
    Scan = "Scan"
    Generated = "Generated"


PROVENANCE_CODE = {Provenance.EM: 0, Provenance.NL: 1, Provenance.Scan: 2,
                   Provenance.Generated: 3}
PROVENANCE_FROM_CODE = {v: k for k, v in PROVENANCE_CODE.items()}

CHANNEL_NAMES = ("re", "im", "abs", "re_a0", "im_a0", "abs_a0",
                 "re_s0", "im_s0", "abs_s0")


@dataclass(frozen=True)
class WavefieldGrid:
    data: np.ndarray        # complex (ny, nx)
    dx: float
    dy: float
    omega: float
    origin: tuple = (0.0, 0.0)
    provenance: Provenance = Provenance.Generated

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.ndim != 2 or d.shape[0] < 8 or d.shape[1] < 8:
            raise ValueError("wavefield grids must be at least 8x8")
        if not np.all(np.isfinite(d)):
            raise ValueError("wavefield contains non-finite values")
        object.__setattr__(self, "data", d)

    @property
    def nx(self):
        return self.data.shape[1]

    @property
    def ny(self):
        return self.data.shape[0]

    @property
    def x(self):
        return self.origin[0] + self.dx * np.arange(self.nx)

    @property
    def y(self):
        return self.origin[1] + self.dy * np.arange(self.ny)


@dataclass(frozen=True)
class ChannelStack:
    """The 9 model-input channels, float32, fixed order; `scale` records the
    max-|phi| normalization applied before splitting (0 for a zero field)."""

    channels: np.ndarray    # (9, ny, nx) float32
    dx: float
    dy: float
    omega: float
    scale: float
    origin: tuple = (0.0, 0.0)
    provenance: Provenance = Provenance.Generated

    @property
    def shape(self):
        return self.channels.shape


def fft2(grid_data: np.ndarray) -> np.ndarray:
    return np.fft.fft2(grid_data)


def ifft2(spec: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(spec)


def wavenumber_axes(grid: WavefieldGrid):
    kx = 2 * np.pi * np.fft.fftfreq(grid.nx, d=grid.dx)
    ky = 2 * np.pi * np.fft.fftfreq(grid.ny, d=grid.dy)
    return kx, ky


def filter_bandwidth(k_center: float, neighbors) -> float:
    """Gaussian sigma giving amplitude 2^(-1/2) (half power) midway to the
    nearest neighboring center wavenumber."""
    neighbors = [abs(n - k_center) for n in neighbors if n != k_center]
    if not neighbors:
        return k_center / 4.0
    half_gap = min(neighbors) / 2.0
    return half_gap / np.sqrt(np.log(2.0))


def mode_filter(grid: WavefieldGrid, k_center: float, neighbors=(),
                sigma: float = None) -> WavefieldGrid:
    """Radial Gaussian wavenumber-domain filter around one mode circle."""
    if k_center >= np.pi / max(grid.dx, grid.dy):
        raise Unresolvable(
            f"k_center {k_center:g} rad/m beyond Nyquist {np.pi / max(grid.dx, grid.dy):g}")
    if sigma is None:
        sigma = filter_bandwidth(k_center, neighbors)
    kx, ky = wavenumber_axes(grid)
    KX, KY = np.meshgrid(kx, ky)
    KR = np.hypot(KX, KY)
    gain = np.exp(-((KR - k_center) ** 2) / (2 * sigma**2))
    out = ifft2(fft2(grid.data) * gain)
    return replace(grid, data=out)


def resample_to_grid(field, nx: int, ny: int, region=None) -> WavefieldGrid:
    """Quadratic resampling onto a uniform nx x ny grid.

    `field` is either a fem ComplexField (evaluated through its P2 basis) or
    a WavefieldGrid (quadratic spline).  `region` = (x0, x1, y0, y1) selects
    the target extent, defaulting to the source bounds.
    """
    from .fem.helmholtz import ComplexField  # local import to avoid a cycle

    if isinstance(field, ComplexField):
        bounds = (field.mesh.xs[0], field.mesh.xs[-1], field.mesh.ys[0], field.mesh.ys[-1])
        if region is None:
            region = bounds
        _check_region(region, bounds)
        xs = np.linspace(region[0], region[1], nx)
        ys = np.linspace(region[2], region[3], ny)
        X, Y = np.meshgrid(xs, ys)
        vals = field.on_points(X.ravel(), Y.ravel()).reshape(ny, nx)
        return WavefieldGrid(data=vals, dx=xs[1] - xs[0], dy=ys[1] - ys[0],
                             omega=field.omega, origin=(xs[0], ys[0]),
                             provenance=Provenance.EM)
    if isinstance(field, WavefieldGrid):
        bounds = (field.x[0], field.x[-1], field.y[0], field.y[-1])
        if region is None:
            region = bounds
        _check_region(region, bounds)
        if region == bounds and (nx, ny) == (field.nx, field.ny):
            return field
        xs = np.linspace(region[0], region[1], nx)
        ys = np.linspace(region[2], region[3], ny)
        sp_re = RectBivariateSpline(field.y, field.x, field.data.real, kx=2, ky=2)
        sp_im = RectBivariateSpline(field.y, field.x, field.data.imag, kx=2, ky=2)
        vals = sp_re(ys, xs) + 1j * sp_im(ys, xs)
        return WavefieldGrid(data=vals, dx=xs[1] - xs[0], dy=ys[1] - ys[0],
                             omega=field.omega, origin=(xs[0], ys[0]),
                             provenance=field.provenance)
    raise TypeError(f"cannot resample {type(field).__name__}")


def _check_region(region, bounds):
    x0, x1, y0, y1 = region
    eps = 1e-9
    if x0 < bounds[0] - eps or x1 > bounds[1] + eps or y0 < bounds[2] - eps or y1 > bounds[3] + eps:
        raise OutOfBounds(f"target region {region} outside source bounds {bounds}")


def crop(grid: WavefieldGrid, region) -> WavefieldGrid:
    """Index-aligned crop to the cells inside region (no interpolation)."""
    x0, x1, y0, y1 = region
    _check_region(region, (grid.x[0], grid.x[-1], grid.y[0], grid.y[-1]))
    ix = np.where((grid.x >= x0 - 1e-12) & (grid.x <= x1 + 1e-12))[0]
    iy = np.where((grid.y >= y0 - 1e-12) & (grid.y <= y1 + 1e-12))[0]
    return replace(grid, data=grid.data[np.ix_(iy, ix)],
                   origin=(grid.x[ix[0]], grid.y[iy[0]]))


def build_channel_stack(grid: WavefieldGrid, table: DispersionTable) -> ChannelStack:
    """Normalize, mode-filter, and split into the fixed 9-channel order."""
    if abs(table.omega - grid.omega) > 1e-6 * max(table.omega, 1.0):
        raise MissingMode("dispersion table frequency does not match the grid")
    try:
        k_a0 = table.mode("A", 0).k
        k_s0 = table.mode("S", 0).k
    except Exception as exc:
        raise MissingMode("channel stack needs both A0 and S0") from exc

    scale = float(np.abs(grid.data).max())
    if scale == 0.0:
        norm = grid
    else:
        norm = replace(grid, data=grid.data / scale)
    a0 = mode_filter(norm, k_a0, neighbors=[k_s0])
    s0 = mode_filter(norm, k_s0, neighbors=[k_a0])
    chans = []
    for g in (norm, a0, s0):
        chans.extend([g.data.real, g.data.imag, np.abs(g.data)])
    stack = np.stack(chans).astype(np.float32)
    return ChannelStack(channels=stack, dx=grid.dx, dy=grid.dy, omega=grid.omega,
                        scale=scale, origin=grid.origin, provenance=grid.provenance)


@dataclass(frozen=True)
class CorruptionSpec:
    """Synthetic measurement-corruption recipe.

    sigma is sigma_factor times the std (or variance, per sigma_mode) of
    |phi|; the overall level is drawn per call from N(level_mean, level_std)
    clamped nonnegative.  The mask drops an exact fraction of pixels and is
    applied with probability mask_prob.
    """

    sigma_factor: float = 0.5
    sigma_mode: str = "std"          # 'std' | 'var'
    level_mean: float = 1.0
    level_std: float = 0.5
    mask_fraction: float = 0.25
    mask_prob: float = 0.5
    speckle_bandwidth: float = 2.0   # cells

    def __post_init__(self):
        if not 0 <= self.mask_fraction <= 1:
            raise ValueError("mask fraction must lie in [0,1]")
        if self.sigma_mode not in ("std", "var"):
            raise ValueError("sigma_mode must be 'std' or 'var'")


def speckle_pattern(shape, bandwidth, rng) -> np.ndarray:
    """Zero-mean unit-variance speckle: squared smoothed white noise."""
    white = rng.standard_normal(shape)
    sm = gaussian_filter(white, sigma=bandwidth, mode="nearest")
    s2 = sm**2
    std = s2.std()
    if std == 0:
        return np.zeros(shape)
    return (s2 - s2.mean()) / std


def synth_corrupt(grid: WavefieldGrid, spec: CorruptionSpec, rng) -> WavefieldGrid:
    """Additive Gaussian noise + speckle + random pixel dropout (pure)."""
    phi = grid.data
    mag = np.abs(phi)
    base = mag.std() if spec.sigma_mode == "std" else mag.var()
    if base <= 1e-12 * max(float(mag.max()), 1e-300):
        base = 0.0  # constant field: variance is pure roundoff
    sigma = spec.sigma_factor * base
    eps = max(0.0, rng.normal(spec.level_mean, spec.level_std))
    level = eps * sigma
    out = phi.copy()
    if level > 0:
        out = out + rng.normal(0.0, level, phi.shape) + 1j * rng.normal(0.0, level, phi.shape)
        out = out + level * speckle_pattern(phi.shape, spec.speckle_bandwidth, rng)
    else:
        # keep the stream layout stable so downstream draws stay aligned
        rng.normal(0.0, 1.0, phi.shape)
        rng.normal(0.0, 1.0, phi.shape)
        rng.standard_normal(phi.shape)
    if rng.uniform() < spec.mask_prob:
        n_drop = int(np.floor(spec.mask_fraction * phi.size))
        idx = rng.choice(phi.size, size=n_drop, replace=False)
        flat = out.reshape(-1)
        flat[idx] = 0.0
        out = flat.reshape(phi.shape)
    return replace(grid, data=out)


def import_scan(amplitude_grid, phase_grid, metadata) -> WavefieldGrid:
    """Assemble a complex scan field from amplitude/phase arrays.

    metadata carries dx, dy, freq_hz (and optionally origin); phases in
    radians.  Shapes must agree.
    """
    amp = np.asarray(amplitude_grid, dtype=float)
    ph = np.asarray(phase_grid, dtype=float)
    if amp.shape != ph.shape:
        raise ShapeMismatch(f"amplitude {amp.shape} vs phase {ph.shape}")
    data = amp * np.exp(1j * ph)
    origin = tuple(metadata.get("origin", (0.0, 0.0)))
    return WavefieldGrid(data=data, dx=float(metadata["dx"]), dy=float(metadata["dy"]),
                         omega=2 * np.pi * float(metadata["freq_hz"]),
                         origin=origin, provenance=Provenance.Scan)


def load_scan_files(amp_path, phase_path, meta_path) -> WavefieldGrid:
    """Read the raw-float32/CSV grid pair plus JSON sidecar produced by scan
    preprocessing."""
    with open(meta_path) as fh:
        meta = json.load(fh)
    shape = (int(meta["ny"]), int(meta["nx"]))

    def read_grid(path):
        p = str(path)
        if p.endswith(".csv"):
            return np.loadtxt(p, delimiter=",")
        raw = np.fromfile(p, dtype="<f4")
        if raw.size != shape[0] * shape[1]:
            raise ShapeMismatch(f"{p}: {raw.size} values, expected {shape[0] * shape[1]}")
        return raw.reshape(shape).astype(float)

    return import_scan(read_grid(amp_path), read_grid(phase_path), meta)
