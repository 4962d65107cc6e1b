"""Command-line interface: simulation, dataset generation, wavefield tools,
and report rendering."""

import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import __version__, rng
from .dispersion import dispersion_table
from .engine import DEFAULT_FREQ_HZ, GenerationConfig, generate_dataset, generate_one
from .fem.domain import BCClass
from .materials import IN_TO_M, load_material
from .wavefield import (
    CHANNEL_NAMES,
    CorruptionSpec,
    Provenance,
    WavefieldGrid,
    build_channel_stack,
    load_scan_files,
    mode_filter,
    synth_corrupt,
)
from .wfsio import SampleRecord, file_sha256, read_sample, write_sample

CLASS_CHOICES = click.Choice(["scattering", "periodic", "coupon"])


@click.group()
@click.version_option(__version__)
def main():
    """Guided-wave weld inspection toolkit."""


# ------------------------------------------------------------- dispersion

@main.command()
@click.option("--material", "material_path", type=click.Path(exists=True), default=None,
              help="material JSON (defaults to bundled steel-like)")
@click.option("--freq-khz", type=float, required=True)
@click.option("--thickness-in", type=float, required=True)
@click.option("--max-order", type=int, default=5, show_default=True)
@click.option("--out", "out_csv", type=click.Path(), required=True, help="output CSV")
@click.option("--fig", "out_fig", type=click.Path(), default=None,
              help="also render dispersion-branch figure (PNG)")
def dispersion(material_path, freq_khz, thickness_in, max_order, out_csv, out_fig):
    """Propagating Lamb modes at one frequency, as CSV (and optional figure)."""
    from .report import dispersion_figure, dispersion_rows, write_dispersion_csv

    mat = load_material(material_path)
    thickness = thickness_in * IN_TO_M
    rows = dispersion_rows(mat, freq_khz * 1e3, thickness, max_order=max_order)
    write_dispersion_csv(out_csv, rows)
    click.echo(f"{len(rows)} modes -> {out_csv}")
    for r in rows:
        click.echo(f"  {r['symmetry']}{r['order']}: k={r['k_rad_per_m']:.1f} rad/m "
                   f"vp={r['vp_m_per_s']:.0f} m/s vg={r['vg_m_per_s']:.0f} m/s "
                   f"A={r['amplitude']:.3f}")
    if out_fig:
        fd = freq_khz * 1e-3 * thickness_in * 25.4  # MHz*mm
        dispersion_figure(mat, thickness, out_fig, fd_max_mhz_mm=max(3.0, 1.5 * fd))
        click.echo(f"figure -> {out_fig}")


# -------------------------------------------------------------- simulate

def _sim_config(bc_class, seed, freq_khz, params_path, model, **extra):
    overrides = {}
    if params_path:
        overrides = json.loads(Path(params_path).read_text())
    cfg = GenerationConfig(bc_class=BCClass(bc_class), model=model, seed=seed,
                           freq_hz=freq_khz * 1e3, **extra)
    fields = {k: v for k, v in overrides.items() if k in GenerationConfig.__dataclass_fields__}
    if "dims" in fields and fields["dims"] is not None:
        fields["dims"] = tuple(fields["dims"])
    return replace(cfg, **fields), overrides.get("sample_index", 0)


@main.command("simulate-em")
@click.option("--class", "bc_class", type=CLASS_CHOICES, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--freq-khz", type=float, default=DEFAULT_FREQ_HZ / 1e3, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--params", "params_path", type=click.Path(exists=True), default=None,
              help="JSON overrides for generation config")
@click.option("--diagnostics", "diag_path", type=click.Path(), default=None,
              help="write solver diagnostics JSON")
def simulate_em(bc_class, seed, freq_khz, out_path, params_path, diag_path):
    """Solve one effective-medium sample and store it as WFS."""
    cfg, index = _sim_config(bc_class, seed, freq_khz, params_path, "em")
    t0 = time.perf_counter()
    record = generate_one(cfg, index)
    elapsed = time.perf_counter() - t0
    sha = write_sample(out_path, record)
    click.echo(f"{out_path} ({elapsed:.1f} s, sha256 {sha[:12]}...)")
    if diag_path:
        diag = {"elapsed_seconds": elapsed, "modes": record.params["diagnostics"]}
        Path(diag_path).write_text(json.dumps(diag, indent=1))
        click.echo(f"diagnostics -> {diag_path}")


@main.command("simulate-nl")
@click.option("--class", "bc_class", type=CLASS_CHOICES, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--freq-khz", type=float, default=DEFAULT_FREQ_HZ / 1e3, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--dof-cap", type=int, default=3_000_000, show_default=True)
@click.option("--params", "params_path", type=click.Path(exists=True), default=None)
@click.option("--diagnostics", "diag_path", type=click.Path(), default=None)
def simulate_nl(bc_class, seed, freq_khz, out_path, dof_cap, params_path, diag_path):
    """Solve one 3D elastodynamic sample and store it as WFS."""
    cfg, index = _sim_config(bc_class, seed, freq_khz, params_path, "nl", dof_cap=dof_cap)
    t0 = time.perf_counter()
    record = generate_one(cfg, index)
    elapsed = time.perf_counter() - t0
    sha = write_sample(out_path, record)
    click.echo(f"{out_path} ({elapsed:.1f} s, sha256 {sha[:12]}...)")
    if diag_path:
        diag = {"elapsed_seconds": elapsed, "solves": record.params["diagnostics"]}
        Path(diag_path).write_text(json.dumps(diag, indent=1))


# --------------------------------------------------------- wavefield ops

def _complex_from_record(record: SampleRecord) -> WavefieldGrid:
    scale = record.params.get("normalization_scale", 1.0) or 1.0
    data = (record.channels[0].astype(float) + 1j * record.channels[1].astype(float)) * scale
    return WavefieldGrid(data=data, dx=record.dx, dy=record.dy,
                         omega=2 * np.pi * record.freq_hz,
                         provenance=record.provenance)


def _record_with_stack(record: SampleRecord, grid: WavefieldGrid, note: str) -> SampleRecord:
    mat = load_material()
    table = dispersion_table(mat, record.freq_hz, record.params.get(
        "params", {}).get("thickness", 0.25 * IN_TO_M))
    stack = build_channel_stack(grid, table)
    params = dict(record.params)
    params["normalization_scale"] = stack.scale
    params.setdefault("processing", []).append(note)
    return SampleRecord(channels=stack.channels, label_stiffness=record.label_stiffness,
                        label_crack=record.label_crack, params=params, dx=record.dx,
                        dy=record.dy, freq_hz=record.freq_hz, provenance=grid.provenance)


@main.command("filter")
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--mode", "mode_name", type=click.Choice(["A0", "S0"]), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def filter_cmd(in_path, mode_name, out_path):
    """Extract one Lamb-mode component of a stored wavefield."""
    record = read_sample(in_path)
    grid = _complex_from_record(record)
    mat = load_material()
    thickness = record.params.get("params", {}).get("thickness", 0.25 * IN_TO_M)
    table = dispersion_table(mat, record.freq_hz, thickness)
    k_this = table.mode(mode_name[0], int(mode_name[1])).k
    others = [m.k for m in table.modes if m.k != k_this]
    filtered = mode_filter(grid, k_this, neighbors=others)
    out = _record_with_stack(record, filtered, f"mode_filter:{mode_name}")
    write_sample(out_path, out)
    click.echo(f"{mode_name}-filtered -> {out_path}")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--sigma-mode", type=click.Choice(["std", "var"]), default="std",
              show_default=True, help="interpretation of the noise-scale base")
def corrupt(in_path, seed, out_path, sigma_mode):
    """Apply the synthetic measurement-corruption recipe to a stored field."""
    record = read_sample(in_path)
    grid = _complex_from_record(record)
    spec = CorruptionSpec(sigma_mode=sigma_mode)
    out_grid = synth_corrupt(grid, spec, rng.single(seed))
    out = _record_with_stack(record, out_grid, f"synth_corrupt:seed={seed}")
    write_sample(out_path, out)
    click.echo(f"corrupted -> {out_path}")


@main.command("import-scan")
@click.option("--amp", "amp_path", type=click.Path(exists=True), required=True)
@click.option("--phase", "phase_path", type=click.Path(exists=True), required=True)
@click.option("--meta", "meta_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--thickness-in", type=float, default=0.25, show_default=True)
def import_scan_cmd(amp_path, phase_path, meta_path, out_path, thickness_in):
    """Ingest an amplitude/phase scan pair into the WFS container."""
    grid = load_scan_files(amp_path, phase_path, meta_path)
    mat = load_material()
    table = dispersion_table(mat, grid.omega / (2 * np.pi), thickness_in * IN_TO_M)
    stack = build_channel_stack(grid, table)
    n = grid.data.shape
    params = {
        "format": "weldwave-sample",
        "generator_version": __version__,
        "source": {"amp": str(amp_path), "phase": str(phase_path)},
        "normalization_scale": stack.scale,
        "channel_names": list(CHANNEL_NAMES),
        "params": {"thickness": thickness_in * IN_TO_M},
        "has_labels": False,
        "mode_wavenumbers": {f"{m.symmetry.value}{m.order}": m.k for m in table.modes},
    }
    record = SampleRecord(channels=stack.channels,
                          label_stiffness=np.ones(n, dtype=np.float32),
                          label_crack=np.zeros(n, dtype=np.uint8),
                          params=params, dx=grid.dx, dy=grid.dy,
                          freq_hz=grid.omega / (2 * np.pi), provenance=Provenance.Scan)
    write_sample(out_path, record)
    click.echo(f"scan -> {out_path}")


# ------------------------------------------------------------- datasets

@main.command("gen-dataset")
@click.option("--class", "bc_class", type=CLASS_CHOICES, required=True)
@click.option("--model", type=click.Choice(["em", "nl"]), required=True)
@click.option("--count", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--grid", type=int, default=128, show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--freq-khz", type=float, default=DEFAULT_FREQ_HZ / 1e3, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--params", "params_path", type=click.Path(exists=True), default=None)
def gen_dataset(bc_class, model, count, seed, grid, out_dir, freq_khz, workers, params_path):
    """Generate a labeled dataset with a hashed manifest and 80/20 split."""
    cfg, _ = _sim_config(bc_class, seed, freq_khz, params_path, model,
                         count=count, grid=grid, workers=workers)
    t0 = time.perf_counter()
    manifest = generate_dataset(cfg, out_dir)
    counts = manifest.counts
    click.echo(f"{counts['ok']} samples ({counts['train']} train / {counts['test']} test), "
               f"{counts['failed']} failures in {time.perf_counter() - t0:.1f} s -> {out_dir}")
    if manifest.failures:
        for f in manifest.failures:
            click.echo(f"  FAILED index {f['index']}: {f['error']}", err=True)
        sys.exit(1)


@main.command()
@click.argument("path", type=click.Path(exists=True))
def info(path):
    """Print header fields and content hash of a WFS file."""
    record = read_sample(path)
    c, ny, nx = record.shape
    click.echo(f"file:            {path}")
    click.echo(f"sha256:          {file_sha256(path)}")
    click.echo(f"format_version:  {record.format_version}")
    click.echo(f"grid:            {nx} x {ny} ({c} channels)")
    click.echo(f"spacing:         dx={record.dx:.6g} m dy={record.dy:.6g} m")
    click.echo(f"frequency:       {record.freq_hz / 1e3:.3f} kHz")
    click.echo(f"provenance:      {record.provenance.value}")
    click.echo(f"crack pixels:    {int(record.label_crack.sum())}")
    click.echo(f"stiffness range: [{record.label_stiffness.min():.4f}, "
               f"{record.label_stiffness.max():.4f}]")
    scale = record.params.get("normalization_scale")
    if scale is not None:
        click.echo(f"norm scale:      {scale:.6e}")


@main.command("export-plot")
@click.argument("path", type=click.Path(exists=True))
@click.option("--channel", "channel", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def export_plot(path, channel, out_path):
    """Export one channel as a grayscale PGM image."""
    from .report import save_pgm

    record = read_sample(path)
    if not 0 <= channel < record.shape[0]:
        raise click.BadParameter(f"channel must lie in [0, {record.shape[0] - 1}]")
    save_pgm(out_path, record.channels[channel])
    click.echo(f"channel {channel} ({CHANNEL_NAMES[channel] if channel < 9 else channel}) "
               f"-> {out_path}")


@main.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--out-dir", type=click.Path(), required=True)
def report(path, out_dir):
    """Render figures and a stats CSV for a stored sample."""
    from .report import channel_figure, label_figure, write_stats_csv

    record = read_sample(path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    channel_figure(record, out / "channels.png")
    label_figure(record, out / "labels.png")
    write_stats_csv(record, out / "stats.csv")
    click.echo(f"channels.png, labels.png, stats.csv -> {out_dir}")


if __name__ == "__main__":
    main()
