"""Torch datasets over WFS sample directories and synthetic corruption."""

import numpy as np
import torch
from torch.utils.data import Dataset

from .wfs import manifest_files, read_sample


class WeldSampleDataset(Dataset):
    """Channel stacks with stiffness and crack labels, loaded eagerly
    (datasets here are desk-scale)."""

    def __init__(self, dataset_dir=None, split=None, files=None, limit=None):
        if files is None:
            files = manifest_files(dataset_dir, split=split)
        if limit is not None:
            files = list(files)[:limit]
        self.files = [str(f) for f in files]
        self.samples = [read_sample(f) for f in self.files]

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i):
        s = self.samples[i]
        return (torch.from_numpy(s.channels.astype(np.float32)),
                torch.from_numpy(s.label_stiffness.astype(np.float32))[None],
                torch.from_numpy(s.label_crack.astype(np.float32))[None])

    def complex_fields(self):
        """(N, 2, H, W) normalized (re, im) tensors of the full wavefield."""
        out = [s.channels[:2] for s in self.samples]
        return torch.from_numpy(np.stack(out).astype(np.float32))


def corrupt_fields(fields, rng, sigma_factor=0.5, level_mean=1.0, level_std=0.5,
                   mask_fraction=0.25, mask_prob=0.5, speckle_bandwidth=2.0,
                   awgn_extra=0.0):
    """Synthetic measurement corruption of (N, 2, H, W) field tensors.

    Additive Gaussian noise and speckle scaled by a per-sample level drawn
    from N(level_mean, level_std) (clamped nonnegative) times sigma_factor
    times the field magnitude spread, then random pixel dropout applied with
    probability mask_prob.  awgn_extra adds plain white noise relative to the
    field std (the out-of-distribution protocol knob).
    """
    fields = np.asarray(fields, dtype=np.float32)
    out = fields.copy()
    n, _, h, w = fields.shape
    for i in range(n):
        mag = np.hypot(fields[i, 0], fields[i, 1])
        sigma = sigma_factor * mag.std()
        eps = max(0.0, rng.normal(level_mean, level_std))
        level = eps * sigma
        if level > 0:
            out[i] += rng.normal(0.0, level, (2, h, w)).astype(np.float32)
            out[i, 0] += (level * _speckle((h, w), speckle_bandwidth, rng)).astype(np.float32)
        if awgn_extra > 0:
            out[i] += rng.normal(0.0, awgn_extra * fields[i].std(), (2, h, w)).astype(np.float32)
        if rng.uniform() < mask_prob:
            n_drop = int(np.floor(mask_fraction * h * w))
            idx = rng.choice(h * w, size=n_drop, replace=False)
            flat = out[i].reshape(2, -1)
            flat[:, idx] = 0.0
    return torch.from_numpy(out)


def _speckle(shape, bandwidth, rng):
    white = rng.standard_normal(shape)
    # separable binomial smoothing approximating a Gaussian kernel
    k = max(1, int(round(bandwidth)))
    for _ in range(k * k):
        white = 0.25 * (np.roll(white, 1, 0) + np.roll(white, -1, 0)
                        + np.roll(white, 1, 1) + np.roll(white, -1, 1))
    s2 = white**2
    sd = s2.std()
    return (s2 - s2.mean()) / sd if sd > 0 else np.zeros(shape)


def downsample(fields, factor):
    """Average-pool (N, C, H, W) tensors by an integer factor."""
    t = torch.as_tensor(fields)
    return torch.nn.functional.avg_pool2d(t, factor)


def _radial_gaussian_filter(field_c, dx, dy, k_center, k_neighbor):
    """Wavenumber-domain mode extraction per the published preprocessing:
    radial Gaussian with half-power gain midway to the neighbor center."""
    ny, nx = field_c.shape
    kx = 2 * np.pi * np.fft.fftfreq(nx, d=dx)
    ky = 2 * np.pi * np.fft.fftfreq(ny, d=dy)
    KX, KY = np.meshgrid(kx, ky)
    kr = np.hypot(KX, KY)
    sigma = abs(k_neighbor - k_center) / 2.0 / np.sqrt(np.log(2.0))
    gain = np.exp(-((kr - k_center) ** 2) / (2 * sigma**2))
    return np.fft.ifft2(np.fft.fft2(field_c) * gain)


def build_stack_from_field(field_2ch, k_a0, k_s0, dx, dy):
    """Rebuild the 9-channel model input from a (2, H, W) re/im field so
    restored wavefields feed the inversion nets consistently."""
    f = np.asarray(field_2ch, dtype=np.float64)
    phi = f[0] + 1j * f[1]
    scale = np.abs(phi).max()
    if scale > 0:
        phi = phi / scale
    a0 = _radial_gaussian_filter(phi, dx, dy, k_a0, k_s0)
    s0 = _radial_gaussian_filter(phi, dx, dy, k_s0, k_a0)
    chans = []
    for g in (phi, a0, s0):
        chans.extend([g.real, g.imag, np.abs(g)])
    return torch.from_numpy(np.stack(chans).astype(np.float32))[None]
