"""Dataset design-variable distributions and per-sample parameter draws."""

from dataclasses import dataclass, field, asdict

import numpy as np

from .fem.domain import BCClass

IN_TO_M = 0.0254

# interior (physical) extents per problem class, meters
CLASS_DIMS = {
    BCClass.Scattering: (8 * IN_TO_M, 8 * IN_TO_M),
    BCClass.Periodic: (8 * IN_TO_M, 8 * IN_TO_M),
    BCClass.FreeFree: (4 * IN_TO_M, 8 * IN_TO_M),
}
DEFAULT_THICKNESS = 0.25 * IN_TO_M


@dataclass(frozen=True)
class DistributionConfig:
    """Knobs for the draws the source tables leave parameterless."""

    w0_mean: float = 0.3
    w0_std: float = 0.05
    epsv_mean: float = 0.05
    epsv_std: float = 0.01
    crack_prob: float = 0.5
    radius_per_depth: float = 2.5   # weld corridor radius R = this * d_w
    bead_height: float = 0.1
    bead_jitter: float = 0.3


@dataclass(frozen=True)
class SampleParams:
    bc_class: BCClass
    sample_index: int
    crack_present: bool
    crack_length: float      # L_c (m)
    crack_depth: float       # d_c (m)
    theta_w: float           # rad
    weld_depth: float        # d_w (m)
    force_xy: tuple          # (x, y) in interior coordinates (m)
    w0: float
    eps_v: float
    thickness: float
    interior: tuple          # (Lx, Ly) interior extents (m)

    @property
    def depth_ratio(self) -> float:
        return self.crack_depth / self.thickness

    def to_json_dict(self):
        d = asdict(self)
        d["bc_class"] = self.bc_class.value
        d["force_xy"] = list(self.force_xy)
        d["interior"] = list(self.interior)
        return d


def sample_params(bc_class, rng, sample_index: int = 0,
                  thickness: float = DEFAULT_THICKNESS,
                  dims=None, config: DistributionConfig = None,
                  force_margin: float = 0.0) -> SampleParams:
    """One draw of every dataset design variable.

    Crack length/depth are uniform, crack presence Bernoulli, weld angle and
    depth normal (truncated to physical bounds), and the force location
    normal about the interior center.  The periodic class pins theta_w = 0
    so the weld stays continuous across the seam.
    """
    bc_class = BCClass(bc_class)
    cfg = config or DistributionConfig()
    L, W = dims if dims is not None else CLASS_DIMS[bc_class]
    H = thickness

    crack_length = rng.uniform(L / 50, L / 2)
    crack_depth = rng.uniform(H / 10, H)
    crack_present = bool(rng.uniform() < cfg.crack_prob)
    theta_w = float(np.clip(rng.normal(0.0, np.pi / 4), -np.pi / 2 + 0.1, np.pi / 2 - 0.1))
    if bc_class == BCClass.Periodic:
        theta_w = 0.0
    weld_depth = float(np.clip(rng.normal(H / 5, H / 20), H / 40, H / 2))
    center = np.array([L / 2, W / 2])
    draw = rng.normal(center, [W / 4, H / 6])
    m = max(force_margin, 0.02 * min(L, W))
    force_xy = (float(np.clip(draw[0], m, L - m)), float(np.clip(draw[1], m, W - m)))
    w0 = float(np.clip(rng.normal(cfg.w0_mean, cfg.w0_std), 0.01, 0.9))
    eps_v = float(np.clip(rng.normal(cfg.epsv_mean, cfg.epsv_std), 0.0, 0.5))
    return SampleParams(bc_class=bc_class, sample_index=sample_index,
                        crack_present=crack_present, crack_length=crack_length,
                        crack_depth=crack_depth, theta_w=theta_w,
                        weld_depth=weld_depth, force_xy=force_xy, w0=w0,
                        eps_v=eps_v, thickness=H, interior=(L, W))


def train_test_split(dataset_seed: int, count: int, train_fraction: float = 0.8):
    """Deterministic assignment: a seed-keyed permutation marks the first
    round(train_fraction * count) positions as training samples."""
    ss = np.random.SeedSequence((int(dataset_seed), 0x5EED5))
    perm = np.random.Generator(np.random.PCG64(ss)).permutation(count)
    n_train = int(round(train_fraction * count))
    split = np.empty(count, dtype=object)
    split[perm[:n_train]] = "train"
    split[perm[n_train:]] = "test"
    return list(split)
