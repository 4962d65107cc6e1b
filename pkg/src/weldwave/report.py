"""Figure and delimited-output rendering for the CLI report paths."""

import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .dispersion import SurfaceForce, dispersion_table
from .wavefield import CHANNEL_NAMES


def save_pgm(path, array):
    """8-bit binary PGM of a real 2D array, min-max normalized."""
    a = np.asarray(array, dtype=float)
    lo, hi = a.min(), a.max()
    scale = (a - lo) / (hi - lo) if hi > lo else np.zeros_like(a)
    img = np.round(255 * scale).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def dispersion_rows(material, freq_hz, thickness, max_order=5):
    """CSV-ready rows: symmetry, order, k, vp, vg, amplitude."""
    table = dispersion_table(material, freq_hz, thickness, max_order=max_order,
                             force=SurfaceForce(kind="point"))
    rows = []
    for m in table.modes:
        rows.append({
            "symmetry": m.symmetry.value,
            "order": m.order,
            "k_rad_per_m": m.k,
            "vp_m_per_s": m.vp,
            "vg_m_per_s": m.vg,
            "amplitude": table.amplitudes[(m.symmetry, m.order)],
        })
    return rows


def write_dispersion_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["symmetry", "order", "k_rad_per_m",
                                                "vp_m_per_s", "vg_m_per_s", "amplitude"])
        writer.writeheader()
        writer.writerows(rows)


def dispersion_figure(material, thickness, out_png, fd_max_mhz_mm=4.0, n_points=60,
                      max_order=5):
    """Wavenumber / phase velocity / group velocity branches versus
    frequency-thickness product."""
    from .dispersion import find_modes

    h = thickness / 2
    fds = np.linspace(0.1, fd_max_mhz_mm, n_points)
    branches = {}
    for fd in fds:
        freq = fd * 1e6 / (2 * h * 1e3)
        for m in find_modes(material, 2 * np.pi * freq, h, max_order=max_order):
            key = (m.symmetry.value, m.order)
            branches.setdefault(key, []).append((fd, m.k, m.vp, m.vg))
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    titles = ["wavenumber (rad/m)", "phase velocity (m/s)", "group velocity (m/s)"]
    for (sym, order), pts in sorted(branches.items()):
        pts = np.array(pts)
        style = "-" if sym == "A" else "--"
        for ax, col in zip(axes, (1, 2, 3)):
            ax.plot(pts[:, 0], pts[:, col], style, label=f"{sym}{order}")
    for ax, title in zip(axes, titles):
        ax.set_xlabel("frequency x thickness (MHz mm)")
        ax.set_title(title)
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(out_png, dpi=140)
    plt.close(fig)


def channel_figure(record, out_png):
    """3x3 panel of the sample's input channels."""
    fig, axes = plt.subplots(3, 3, figsize=(10, 10))
    for ax, name, chan in zip(axes.ravel(), CHANNEL_NAMES, record.channels):
        im = ax.imshow(chan, origin="lower", cmap="RdBu_r")
        ax.set_title(name, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.suptitle(f"{record.provenance.value} sample, {record.freq_hz / 1e3:.0f} kHz")
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)


def label_figure(record, out_png):
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    im0 = axes[0].imshow(record.label_stiffness, origin="lower", cmap="viridis")
    axes[0].set_title("relative stiffness")
    fig.colorbar(im0, ax=axes[0], fraction=0.046)
    axes[1].imshow(record.label_crack, origin="lower", cmap="gray_r", vmin=0, vmax=1)
    axes[1].set_title("crack mask")
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)


def write_stats_csv(record, path):
    """Per-channel summary stats next to the rendered figures."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel", "min", "max", "mean", "std"])
        for name, chan in zip(CHANNEL_NAMES, record.channels):
            writer.writerow([name, f"{chan.min():.6e}", f"{chan.max():.6e}",
                             f"{chan.mean():.6e}", f"{chan.std():.6e}"])
        s = record.label_stiffness
        writer.writerow(["label_stiffness", f"{s.min():.6e}", f"{s.max():.6e}",
                         f"{s.mean():.6e}", f"{s.std():.6e}"])
        c = record.label_crack
        writer.writerow(["label_crack", int(c.min()), int(c.max()),
                         f"{c.mean():.6e}", f"{c.std():.6e}"])
