"""Weldline stiffness parameterization, cracks, and impedance modulation.

The relative stiffness grid is a product of three fields: a nominal weld
reduction W about the weld path, a bead modulation B along it, and a smooth
random variation V — E(x)/E0 = W·B·V, clamped away from zero.  Cracks are
confined random walks inside the weld corridor, rendered as a smoothed mask
whose on-crack value encodes depth as 1 - c_d^2.
"""

import json
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DomainTooSmall

# Mode-specific impedance scaling constants (tuned against elastodynamic
# solutions in the 200-400 kHz band).
MODULATION_ALPHA = {("A", 0): 1.1, ("S", 0): 1.3, ("A", 1): 1.0}
MODULATION_BETA = {("A", 0): 0.5, ("S", 0): 0.5, ("A", 1): 0.5}

STIFFNESS_FLOOR = 0.05
CRACK_WIDTH_MAX = 0.01 * 0.0254  # 0.01 in


@dataclass(frozen=True)
class WeldPath:
    """Arc-length parameterized polyline through the domain."""

    points: np.ndarray  # (n, 2) vertices in m

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise ValueError("path needs at least two 2D points")
        object.__setattr__(self, "points", pts)

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))

    @staticmethod
    def straight(center, theta_w, length) -> "WeldPath":
        """Straight weld line through `center` at angle theta_w from +y."""
        d = np.array([np.sin(theta_w), np.cos(theta_w)])
        c = np.asarray(center, dtype=float)
        return WeldPath(np.array([c - 0.5 * length * d, c + 0.5 * length * d]))

    def frame(self, x, y):
        """Signed perpendicular distance and arc-length coordinate of points.

        Returns (d_perp, s_star): for each query point, the signed distance to
        the nearest point of the polyline and its arc-length coordinate.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        q = np.stack([x, y], axis=-1)
        best_d2 = np.full(x.shape, np.inf)
        d_perp = np.zeros(x.shape)
        s_star = np.zeros(x.shape)
        s0 = 0.0
        for a, b in zip(self.points[:-1], self.points[1:]):
            ab = b - a
            seg_len = np.linalg.norm(ab)
            if seg_len == 0:
                continue
            t = np.clip(((q - a) @ ab) / seg_len**2, 0.0, 1.0)
            proj = a + t[..., None] * ab
            diff = q - proj
            d2 = np.sum(diff * diff, axis=-1)
            # signed by the left normal of the segment
            nrm = np.array([-ab[1], ab[0]]) / seg_len
            sgn = np.sign(diff @ nrm)
            closer = d2 < best_d2
            best_d2 = np.where(closer, d2, best_d2)
            d_perp = np.where(closer, np.where(sgn == 0, 1.0, sgn) * np.sqrt(d2), d_perp)
            s_star = np.where(closer, s0 + t * seg_len, s_star)
            s0 += seg_len
        return d_perp, s_star


@dataclass(frozen=True)
class BeadSpec:
    height: float = 0.1       # a, fractional reduction per bead
    spacing: float = 0.005    # s0, mean center spacing (m)
    half_width: float = 0.0025  # sigma_b (m)
    exponent: float = 2.0     # p
    jitter: float = 0.3       # beta, fractional spacing/height jitter


@dataclass(frozen=True)
class WeldSpec:
    radius: float                 # R (m)
    fillet_ratio: float = 0.2     # alpha, r_f = alpha R
    depth: float = 0.00127        # d_w (m)
    nominal_reduction: float = 0.3   # W0 in [0,1)
    variation_amplitude: float = 0.05  # eps_V
    bead: BeadSpec = field(default_factory=BeadSpec)
    boundary_r0: float = None     # f_b outer radius, defaults to R
    boundary_w: float = None      # f_b ramp width, defaults to R/4

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("weld radius must be positive")
        if not 0 < self.fillet_ratio < 1:
            raise ValueError("fillet ratio must lie in (0,1)")
        if not 0 <= self.nominal_reduction < 1:
            raise ValueError("nominal reduction must lie in [0,1)")
        if self.boundary_r0 is None:
            object.__setattr__(self, "boundary_r0", self.radius)
        if self.boundary_w is None:
            object.__setattr__(self, "boundary_w", self.radius / 4)

    @staticmethod
    def default(radius=0.004) -> "WeldSpec":
        return WeldSpec(radius=radius, bead=BeadSpec(spacing=radius, half_width=radius / 2))


@dataclass
class CrackSpec:
    present: bool = False
    start: tuple = (0.0, 0.0)
    length: float = 0.0        # L_c (m)
    depth_ratio: float = 0.0   # c_d in (0,1]
    width: float = 0.000254    # w_c (m), <= 0.01 in
    path: np.ndarray = None    # (n, 2) walk vertices

    def __post_init__(self):
        if self.width > CRACK_WIDTH_MAX + 1e-12:
            raise ValueError("crack width exceeds 0.01 in")

    def to_json_dict(self):
        d = {"present": self.present, "start": list(self.start), "length": self.length,
             "depth_ratio": self.depth_ratio, "width": self.width}
        if self.path is not None:
            d["path"] = np.asarray(self.path).tolist()
        return d


@dataclass
class StiffnessField:
    """E(x)/E0 sampled on a uniform grid; grid[j, i] sits at (x_i, y_j)."""

    grid: np.ndarray
    dx: float
    dy: float
    origin: tuple = (0.0, 0.0)

    @property
    def x(self):
        return self.origin[0] + self.dx * np.arange(self.grid.shape[1])

    @property
    def y(self):
        return self.origin[1] + self.dy * np.arange(self.grid.shape[0])


@dataclass
class ModulationField:
    """Per-mode wavespeed modulation grids, same layout as the parent field."""

    grids: dict              # (symmetry, order) -> ndarray
    alpha: dict
    beta: dict
    dx: float
    dy: float
    origin: tuple = (0.0, 0.0)


def nominal_profile(d_perp, radius, fillet_ratio):
    """Semicircular weld cross-section with a cosine fillet at the rim.

    Value 1 at the apex, 0 beyond the weld radius, continuous everywhere.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not 0 < fillet_ratio < 1:
        raise ValueError("fillet ratio must lie in (0,1)")
    d = np.abs(np.asarray(d_perp, dtype=float))
    r_f = fillet_ratio * radius
    with np.errstate(invalid="ignore"):
        semi = np.sqrt(np.clip(1.0 - (d / radius) ** 2, 0.0, None))
    ramp = 0.5 * (1.0 + np.cos(np.pi * (d - (radius - r_f)) / r_f))
    out = np.where(d <= radius - r_f, semi,
                   np.where(d <= radius, semi * ramp, 0.0))
    return out if out.ndim else float(out)


def boundary_reduction(d_i, r0, w):
    """Edge-sharpening factor: 1 inside, cosine ramp to 0 across (r0-w, r0]."""
    if not r0 > w > 0:
        raise ValueError("need r0 > w > 0")
    d = np.asarray(d_i, dtype=float)
    ramp = 0.5 * (1.0 + np.cos(np.pi * (d - (r0 - w)) / w))
    out = np.where(d <= r0 - w, 1.0, np.where(d <= r0, ramp, 0.0))
    return out if out.ndim else float(out)


def bead_centers(length, spec: BeadSpec, rng) -> tuple:
    """Jittered bead centers and heights covering [0, length]."""
    centers, heights = [], []
    s = spec.spacing * (1 + rng.uniform(-spec.jitter, spec.jitter)) * 0.5
    while s <= length:
        centers.append(s)
        heights.append(spec.height * (1 + rng.uniform(-spec.jitter, spec.jitter)))
        s = s + spec.spacing * (1 + rng.uniform(-spec.jitter, spec.jitter))
    return np.array(centers), np.array(heights)


def bead_profile(s, spec: BeadSpec, rng):
    """Sum of compactly supported bead bumps along arc length.

    Each bump is A_k (1 - ((s-s_k)/sigma_b)^2)^p on |s-s_k| <= sigma_b with
    jittered positions and heights; deterministic for a given generator state.
    """
    if spec.half_width <= 0 or spec.exponent <= 0:
        raise ValueError("bead half_width and exponent must be positive")
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    if spec.height == 0:
        return out if out.ndim else float(out)
    length = float(s.max()) if s.size else 0.0
    centers, heights = bead_centers(length + spec.half_width, spec, rng)
    for sk, ak in zip(centers, heights):
        u = (s - sk) / spec.half_width
        mask = np.abs(u) <= 1.0
        out = out + np.where(mask, ak * np.clip(1 - u * u, 0, None) ** spec.exponent, 0.0)
    return out if out.ndim else float(out)


def variation_field(shape, eps_v, kernel_bandwidth_cells, rng):
    """Gaussian-smoothed white noise scaled by eps_v (zero mean by design)."""
    if eps_v < 0:
        raise ValueError("eps_v must be nonnegative")
    if eps_v == 0:
        return np.zeros(shape)
    white = rng.standard_normal(shape)
    return eps_v * gaussian_filter(white, sigma=kernel_bandwidth_cells, mode="nearest")


def compose_stiffness(shape, dx, dy, origin, path: WeldPath, weld: WeldSpec,
                      rng_beads, rng_variation, variation_bandwidth_cells=None) -> StiffnessField:
    """Relative stiffness grid W·B·V on a uniform grid.

    W = 1 - W0·nominal_profile(d_perp)·boundary_reduction(|d_perp|),
    B = 1 - bead_profile(s*) inside the weld corridor, V = 1 + variation.
    The product is clamped to the stiffness floor and equals 1 outside the
    weld support.
    """
    ny, nx = shape
    xs = origin[0] + dx * np.arange(nx)
    ys = origin[1] + dy * np.arange(ny)
    X, Y = np.meshgrid(xs, ys)
    d_perp, s_star = path.frame(X, Y)

    span = min(xs[-1] - xs[0], ys[-1] - ys[0])
    if 2 * weld.radius >= span:
        raise DomainTooSmall("weld corridor wider than the grid")
    inside = np.abs(d_perp) <= weld.radius
    if not np.any(inside):
        raise DomainTooSmall("weld corridor does not intersect the grid")
    w_field = 1.0 - weld.nominal_reduction * nominal_profile(d_perp, weld.radius, weld.fillet_ratio) \
        * boundary_reduction(np.abs(d_perp), weld.boundary_r0, weld.boundary_w)

    b_field = np.ones(shape)
    if weld.bead.height != 0:
        bumps = bead_profile(s_star, weld.bead, rng_beads)
        # beads ride on the weld profile: zero contribution outside the corridor
        b_field = 1.0 - np.where(inside, bumps * nominal_profile(d_perp, weld.radius, weld.fillet_ratio), 0.0)

    if variation_bandwidth_cells is None:
        variation_bandwidth_cells = max(1.0, weld.radius / 2 / max(dx, dy))
    v_field = 1.0 + variation_field(shape, weld.variation_amplitude,
                                    variation_bandwidth_cells, rng_variation) \
        * nominal_profile(d_perp, weld.radius, weld.fillet_ratio)

    grid = np.clip(w_field * b_field * v_field, STIFFNESS_FLOOR, None)
    grid[~inside] = 1.0
    return StiffnessField(grid=grid, dx=dx, dy=dy, origin=tuple(origin))


def crack_walk(start, length, step, path: WeldPath, weld_radius, rng,
               depth_ratio, width=0.000254) -> CrackSpec:
    """Fixed-step random walk confined to the weld corridor.

    Headings are drawn uniformly per step; excursions beyond |d_perp| =
    weld_radius are folded back (reflecting confinement).  The walk stops
    once its arc length reaches `length` (within one step).
    """
    if length <= 0:
        raise ValueError("crack length must be positive")
    n_steps = max(1, int(np.ceil(length / step)))
    pts = [np.asarray(start, dtype=float)]
    travelled = 0.0
    for _ in range(n_steps):
        theta = rng.uniform(0, 2 * np.pi)
        nxt = pts[-1] + step * np.array([np.cos(theta), np.sin(theta)])
        d_perp, _ = path.frame(nxt[0], nxt[1])
        d = float(d_perp)
        if abs(d) > weld_radius:
            # fold the transverse excursion back inside the corridor
            excess = abs(d) - weld_radius
            seg = path.points[1] - path.points[0]
            nrm = np.array([-seg[1], seg[0]]) / np.linalg.norm(seg)
            nxt = nxt - np.sign(d) * 2 * excess * nrm
            d2, _ = path.frame(nxt[0], nxt[1])
            if abs(float(d2)) > weld_radius:  # long steps can overshoot the far wall
                nxt = nxt - float(d2 - np.sign(d2) * weld_radius) * nrm
        pts.append(nxt)
        travelled += step
        if travelled >= length:
            break
    return CrackSpec(present=True, start=tuple(np.asarray(start, dtype=float)),
                     length=length, depth_ratio=depth_ratio, width=width,
                     path=np.array(pts))


def crack_mask(shape, dx, dy, origin, crack: CrackSpec, sigma) -> np.ndarray:
    """Smoothed crack mask: 1 - c_d^2 within half a crack width of the path,
    1 elsewhere, then Gaussian-smoothed with bandwidth sigma (meters)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    ny, nx = shape
    if not crack.present or crack.path is None:
        return np.ones(shape)
    xs = origin[0] + dx * np.arange(nx)
    ys = origin[1] + dy * np.arange(ny)
    X, Y = np.meshgrid(xs, ys)
    walk = WeldPath(crack.path)
    d_perp, _ = walk.frame(X, Y)
    # render at least one cell wide so hairline cracks survive rasterization
    half_width = max(crack.width / 2, 0.5 * min(dx, dy))
    m = np.where(np.abs(d_perp) <= half_width, 1.0 - crack.depth_ratio**2, 1.0)
    sig_cells = sigma / min(dx, dy)
    out = gaussian_filter(m, sigma=sig_cells, mode="nearest")
    return np.clip(out, 1e-9, 1.0)


def thickness_field(stiffness: StiffnessField, path: WeldPath, weld: WeldSpec,
                    h0: float, cap_fraction: float = 0.2) -> np.ndarray:
    """Local thickness grid: weld cap modeled as a fractional bump of the
    nominal profile over the plate thickness h0."""
    X, Y = np.meshgrid(stiffness.x, stiffness.y)
    d_perp, _ = path.frame(X, Y)
    return h0 * (1.0 + cap_fraction * nominal_profile(d_perp, weld.radius, weld.fillet_ratio))


def impedance_modulation(stiffness: StiffnessField, thickness: np.ndarray, h0: float,
                         modes=(("A", 0), ("S", 0)), alpha=None, beta=None) -> ModulationField:
    """Per-mode wavespeed modulation Phi = ((E/E0)·(H/h0)^alpha)^beta.

    Equals 1 wherever relative stiffness and thickness are both 1.
    """
    alpha = dict(MODULATION_ALPHA if alpha is None else alpha)
    beta = dict(MODULATION_BETA if beta is None else beta)
    rel_h = np.asarray(thickness) / h0
    grids = {}
    for key in modes:
        key = (key[0], int(key[1]))
        grids[key] = (stiffness.grid * rel_h ** alpha[key]) ** beta[key]
    return ModulationField(grids=grids, alpha=alpha, beta=beta,
                           dx=stiffness.dx, dy=stiffness.dy, origin=stiffness.origin)


def weld_params_json(weld: WeldSpec, crack: CrackSpec, path: WeldPath) -> str:
    """Canonical JSON document embedded in sample metadata."""
    doc = {
        "weld": {
            "radius": weld.radius,
            "fillet_ratio": weld.fillet_ratio,
            "depth": weld.depth,
            "nominal_reduction": weld.nominal_reduction,
            "variation_amplitude": weld.variation_amplitude,
            "bead": asdict(weld.bead),
            "boundary_r0": weld.boundary_r0,
            "boundary_w": weld.boundary_w,
        },
        "crack": crack.to_json_dict(),
        "path": np.asarray(path.points).tolist(),
    }
    return json.dumps(doc, sort_keys=True)
