"""Sample generation: from drawn parameters to solved, labeled records.

One sample is a pure function of (dataset_seed, sample_index, config): the
parameter draw, bead/variation/crack streams, and corruption each use their
own derived substream, so generation is order- and worker-independent.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, rng
from .dispersion import SurfaceForce, dispersion_table
from .errors import WeldwaveError
from .fem.domain import BCClass, domain_for_class
from .fem.elastic import assemble_nl, build_surface_load, extract_surface, solve_nl
from .fem.helmholtz import GridSampler, assemble, build_load, solve_mode, superpose
from .fem.mesh2d import build_mesh
from .fem.mesh3d import build_mesh3d
from .fem.pml import PMLProfile
from .materials import Material, load_material
from .sampling import (
    CLASS_DIMS,
    DEFAULT_THICKNESS,
    DistributionConfig,
    SampleParams,
    sample_params,
    train_test_split,
)
from .wavefield import (
    CHANNEL_NAMES,
    Provenance,
    WavefieldGrid,
    build_channel_stack,
    resample_to_grid,
)
from .weld import (
    BeadSpec,
    CrackSpec,
    StiffnessField,
    WeldPath,
    WeldSpec,
    compose_stiffness,
    crack_mask,
    crack_walk,
    impedance_modulation,
    thickness_field,
    weld_params_json,
)
from .wfsio import DatasetManifest, SampleRecord, file_sha256, write_sample

DEFAULT_FREQ_HZ = 225e3  # midpoint of the 200-250 kHz inspection band


@dataclass(frozen=True)
class GenerationConfig:
    bc_class: BCClass = BCClass.FreeFree
    model: str = "em"              # 'em' | 'nl'
    count: int = 10
    seed: int = 0
    grid: int = 128
    freq_hz: float = DEFAULT_FREQ_HZ
    thickness: float = DEFAULT_THICKNESS
    dims: tuple = None             # interior (Lx, Ly); None -> class default
    elements_per_wavelength: int = 6
    nodes_per_wavelength: int = 10
    crack_threshold_mode: str = "half_contrast"   # or 'half_depth'
    distributions: DistributionConfig = DistributionConfig()
    material_path: str = None
    dof_cap: int = 3_000_000
    workers: int = 1

    def material(self) -> Material:
        return load_material(self.material_path)

    def interior_dims(self):
        return self.dims if self.dims is not None else CLASS_DIMS[BCClass(self.bc_class)]


def _weld_geometry(params: SampleParams, config: GenerationConfig, offset=(0.0, 0.0)):
    """Weld path/spec and crack in global coordinates (interior + offset)."""
    cfg = config.distributions
    L, W = params.interior
    center = (L / 2 + offset[0], W / 2 + offset[1])
    path = WeldPath.straight(center, params.theta_w, 2.2 * max(L, W))
    radius = cfg.radius_per_depth * params.weld_depth
    weld = WeldSpec(radius=radius, nominal_reduction=params.w0,
                    variation_amplitude=params.eps_v, depth=params.weld_depth,
                    bead=BeadSpec(height=cfg.bead_height, spacing=radius,
                                  half_width=radius / 2, jitter=cfg.bead_jitter))
    crack = CrackSpec(present=False)
    if params.crack_present:
        walk_rng = rng.substream(config.seed, params.sample_index, rng.SUB_CRACK)
        # start on the weld path inside the central half of the interior
        t = walk_rng.uniform(0.35, 0.65)
        lo = np.array(center) - 0.5 * t * np.array([np.sin(params.theta_w), np.cos(params.theta_w)]) * min(L, W)
        d0 = walk_rng.uniform(-radius / 2, radius / 2)
        seg = path.points[1] - path.points[0]
        nrm = np.array([-seg[1], seg[0]]) / np.linalg.norm(seg)
        start = lo + d0 * nrm
        crack = crack_walk(start, params.crack_length, radius / 3, path,
                           radius, walk_rng, params.depth_ratio)
    return path, weld, crack


def _label_axes(config: GenerationConfig, params: SampleParams, offset):
    L, W = params.interior
    n = config.grid
    xs = offset[0] + np.linspace(0.0, L, n)
    ys = offset[1] + np.linspace(0.0, W, n)
    return xs, ys


def _master_stiffness(params, config, path, weld, crack, domain_extent, offset):
    """Stiffness/crack/thickness grids covering the full solver domain on a
    lattice that contains the label grid as an exact subarray."""
    xs, ys = _label_axes(config, params, offset)
    dxs, dys = xs[1] - xs[0], ys[1] - ys[0]
    pad_lo_x = int(np.ceil((xs[0] - 0.0) / dxs - 1e-9))
    pad_lo_y = int(np.ceil((ys[0] - 0.0) / dys - 1e-9))
    pad_hi_x = int(np.ceil((domain_extent[0] - xs[-1]) / dxs - 1e-9))
    pad_hi_y = int(np.ceil((domain_extent[1] - ys[-1]) / dys - 1e-9))
    nx = config.grid + pad_lo_x + pad_hi_x
    ny = config.grid + pad_lo_y + pad_hi_y
    origin = (xs[0] - pad_lo_x * dxs, ys[0] - pad_lo_y * dys)

    beads = rng.substream(config.seed, params.sample_index, rng.SUB_BEADS)
    variation = rng.substream(config.seed, params.sample_index, rng.SUB_VARIATION)
    stiff = compose_stiffness((ny, nx), dxs, dys, origin, path, weld, beads, variation)
    cmask = crack_mask((ny, nx), dxs, dys, origin, crack, sigma=2 * min(dxs, dys))
    # labels threshold the unsmoothed ribbon (the sigma->0 limit): the 2-cell
    # solver smoothing keeps hairline ribbons above the half-contrast tau
    cmask_raster = crack_mask((ny, nx), dxs, dys, origin, crack, sigma=1e-9)
    thick = thickness_field(stiff, path, weld, params.thickness)
    label_slice = (slice(pad_lo_y, pad_lo_y + config.grid),
                   slice(pad_lo_x, pad_lo_x + config.grid))
    return stiff, cmask, cmask_raster, thick, label_slice


def _crack_label(cmask_label, params: SampleParams, mode: str) -> np.ndarray:
    if not params.crack_present:
        return np.zeros_like(cmask_label, dtype=np.uint8)
    cd = params.depth_ratio
    if mode == "half_depth":
        tau = 1.0 - (cd / 2) ** 2
    else:
        tau = 1.0 - cd**2 / 2
    return (cmask_label <= tau).astype(np.uint8)


def generate_sample(params: SampleParams, config: GenerationConfig) -> SampleRecord:
    """Run the configured solver for one parameter draw and label the result."""
    material = config.material()
    table = dispersion_table(material, config.freq_hz, params.thickness)
    k_max = max(m.k for m in table.modes)
    lam_min = 2 * np.pi / k_max
    mode_ks = {f"{m.symmetry.value}{m.order}": m.k for m in table.modes}

    if config.model == "em":
        record_grid, stiff, cmask_raster, label_slice, prov, diags = _run_em(
            params, config, material, table, k_max, lam_min)
    elif config.model == "nl":
        record_grid, stiff, cmask_raster, label_slice, prov, diags = _run_nl(
            params, config, material, table, k_max, lam_min)
    else:
        raise ValueError(f"unknown model {config.model!r}")

    stack = build_channel_stack(record_grid, table)
    stiff_label = stiff.grid[label_slice].astype(np.float32)
    crack_label = _crack_label(cmask_raster[label_slice], params, config.crack_threshold_mode)
    return _finish_record(stack, stiff_label, crack_label, params, config, prov, diags,
                          mode_ks)


def _finish_record(stack, stiff_label, crack_label, params, config, prov, diags,
                   mode_wavenumbers=None):
    meta = {
        "format": "weldwave-sample",
        "generator_version": __version__,
        "dataset_seed": config.seed,
        "sample_index": params.sample_index,
        "model": config.model,
        "bc_class": BCClass(config.bc_class).value,
        "grid": config.grid,
        "freq_hz": config.freq_hz,
        "normalization_scale": stack.scale,
        "channel_names": list(CHANNEL_NAMES),
        "params": params.to_json_dict(),
        "crack_threshold_mode": config.crack_threshold_mode,
        "has_labels": True,
        "diagnostics": diags,
        "mode_wavenumbers": mode_wavenumbers or {},
    }
    return SampleRecord(channels=stack.channels, label_stiffness=stiff_label,
                        label_crack=crack_label, params=meta, dx=stack.dx, dy=stack.dy,
                        freq_hz=config.freq_hz, provenance=prov)


def used_modes(table):
    """Modes carried into the superposition: those with calibrated impedance
    constants (the fundamental pair in the default inspection band)."""
    from .weld import MODULATION_ALPHA
    return [m for m in table.modes if (m.symmetry.value, m.order) in MODULATION_ALPHA]


def _run_em(params, config, material, table, k_max, lam_min):
    bc = BCClass(config.bc_class)
    L, W = params.interior
    domain = domain_for_class(bc, k_max, L, W, params.thickness,
                              config.elements_per_wavelength)
    offset = (domain.pml_width_x, domain.pml_width_y)
    path, weld, crack = _weld_geometry(params, config, offset)
    stiff, cmask, cmask_raster, thick, label_slice = _master_stiffness(
        params, config, path, weld, crack, (domain.Lx, domain.Ly), offset)
    modulation = impedance_modulation(
        stiff, thick, params.thickness,
        modes=[(m.symmetry.value, m.order) for m in used_modes(table)])

    mesh = build_mesh(domain, k_max, crack=crack if crack.present else None)
    force_xy = (params.force_xy[0] + offset[0], params.force_xy[1] + offset[1])
    force = SurfaceForce(kind="gaussian", center=force_xy, radius=lam_min / 4)
    table = table if table.amplitudes else _with_amplitudes(table, force)

    c_sampler = GridSampler(values=cmask, dx=stiff.dx, dy=stiff.dy, origin=stiff.origin)
    active = used_modes(table)
    weights = np.array([table.amplitudes[(m.symmetry, m.order)] for m in active])
    weights = weights / weights.sum()
    fields = []
    diags = []
    for mode, amp in zip(active, weights):
        phi = GridSampler(values=modulation.grids[(mode.symmetry.value, mode.order)],
                          dx=stiff.dx, dy=stiff.dy, origin=stiff.origin)
        pml = PMLProfile.calibrated(domain, table.omega, mode.vp)
        system = assemble(mesh, phi, c_sampler, mode.vp, table.omega, pml)
        rhs = build_load(system, force)
        sol = solve_mode(system, rhs)
        A = system.K - table.omega**2 * system.M
        res = float(np.linalg.norm(A @ sol.values - rhs) / max(np.linalg.norm(rhs), 1e-300))
        # timing is deliberately left out: sample bytes must be run-invariant
        diags.append({"mode": f"{mode.symmetry.value}{mode.order}",
                      "dofs": int(system.n_dofs), "nnz": int(system.K.nnz),
                      "residual": res, "amplitude": float(amp)})
        fields.append((float(amp), sol))
    em = superpose(fields)
    interior = domain.interior
    grid = resample_to_grid(em, config.grid, config.grid, region=interior)
    return grid, stiff, cmask_raster, label_slice, Provenance.EM, diags


def _with_amplitudes(table, force):
    from .dispersion import amplitude_projection
    return amplitude_projection(table, force)


def _run_nl(params, config, material, table, k_max, lam_min):
    bc = BCClass(config.bc_class)
    L, W = params.interior
    domain = domain_for_class(bc, k_max, L, W, params.thickness,
                              config.elements_per_wavelength)
    offset = (domain.pml_width_x, domain.pml_width_y)
    path, weld, crack = _weld_geometry(params, config, offset)
    stiff, cmask, cmask_raster, thick, label_slice = _master_stiffness(
        params, config, path, weld, crack, (domain.Lx, domain.Ly), offset)

    H = params.thickness
    mesh = build_mesh3d(domain.Lx, domain.Ly, H, lam_min,
                        nodes_per_wavelength=config.nodes_per_wavelength,
                        dof_cap=config.dof_cap)
    mesh = replace(mesh, periodic_x=domain.periodic_x)
    centers = mesh.element_centers()
    sampler = GridSampler(values=stiff.grid, dx=stiff.dx, dy=stiff.dy, origin=stiff.origin)
    s2d = sampler.sample(centers[:, 0], centers[:, 1])
    in_weld_layer = centers[:, 2] >= H - params.weld_depth
    E = material.E0 * np.where(in_weld_layer, s2d, 1.0)

    void = None
    if crack.present:
        walk = WeldPath(crack.path)
        d_perp, _ = walk.frame(centers[:, 0], centers[:, 1])
        ribbon = np.abs(d_perp) <= max(crack.width, mesh.dx) / 2
        deep = centers[:, 2] >= H - params.depth_ratio * H
        void = ribbon & deep

    slowest = min(m.vp for m in table.modes)
    pml = PMLProfile.calibrated(domain, table.omega, slowest)
    system = assemble_nl(mesh, E, material.nu, material.rho, table.omega, pml,
                         void_mask=void)
    x0, y0 = params.force_xy[0] + offset[0], params.force_xy[1] + offset[1]
    r0 = lam_min / 4
    prof = lambda X, Y: np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / (2 * r0**2)) / (2 * np.pi * r0**2)
    rhs = build_surface_load(mesh, prof)
    field = solve_nl(system, rhs)
    A = system.K - table.omega**2 * system.M
    res = float(np.linalg.norm(A @ field.values - rhs) / max(np.linalg.norm(rhs), 1e-300))
    diags = [{"mode": "full", "dofs": int(system.n_dofs), "nnz": int(system.K.nnz),
              "residual": res}]
    uz = extract_surface(field)
    if mesh.periodic_x:
        uz = np.concatenate([uz, uz[:, :1]], axis=1)  # close the seam column
    surface = WavefieldGrid(data=uz, dx=mesh.dx, dy=mesh.dy, omega=table.omega,
                            origin=(0.0, 0.0), provenance=Provenance.NL)
    grid = resample_to_grid(surface, config.grid, config.grid, region=domain.interior)
    return grid, stiff, cmask_raster, label_slice, Provenance.NL, diags


def generate_one(config: GenerationConfig, index: int) -> SampleRecord:
    params = sample_params(
        config.bc_class,
        rng.substream(config.seed, index, rng.SUB_PARAMS),
        sample_index=index,
        thickness=config.thickness,
        dims=config.interior_dims(),
        config=config.distributions,
    )
    return generate_sample(params, config)


def _worker(args):
    config, index, out_dir = args
    name = f"sample_{index:05d}.wfs"
    try:
        record = generate_one(config, index)
        sha = write_sample(Path(out_dir) / name, record)
        return {"index": index, "file": name, "sha256": sha}
    except WeldwaveError as exc:
        return {"index": index, "error": f"{type(exc).__name__}: {exc}"}


def generate_dataset(config: GenerationConfig, out_dir) -> DatasetManifest:
    """Generate `count` samples plus a hashed manifest with a deterministic
    80/20 split; failures are recorded, not retried."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(config, i, str(out)) for i in range(config.count)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_worker, jobs))
    else:
        results = [_worker(j) for j in jobs]

    split = train_test_split(config.seed, config.count)
    manifest = DatasetManifest(dataset_seed=config.seed,
                               bc_class=BCClass(config.bc_class).value,
                               model=config.model, grid=config.grid,
                               freq_hz=config.freq_hz, generator_version=__version__)
    for r in sorted(results, key=lambda d: d["index"]):
        if "error" in r:
            manifest.failures.append(r)
        else:
            manifest.samples.append({**r, "split": split[r["index"]]})
    (out / "manifest.json").write_text(manifest.to_json())
    return manifest
