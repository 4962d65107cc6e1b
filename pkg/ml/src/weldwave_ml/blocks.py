"""Attention, spectral, and multi-axis feature blocks for the U-Nets."""

import torch
import torch.nn as nn
import torch.nn.functional as F


class CBAM(nn.Module):
    """Channel-then-spatial attention applied multiplicatively.

    Channel weights come from a shared MLP over the spatially max- and
    average-pooled descriptors; spatial weights from a 7x7 convolution over
    the channel-pooled pair.
    """

    def __init__(self, channels, reduction=4, spatial_kernel=7):
        super().__init__()
        hidden = max(channels // reduction, 1)
        self.mlp = nn.Sequential(
            nn.Linear(channels, hidden), nn.ReLU(inplace=True), nn.Linear(hidden, channels))
        self.spatial = nn.Conv2d(2, 1, spatial_kernel, padding=spatial_kernel // 2)

    def forward(self, x):
        if x.dim() != 4:
            raise ValueError("CBAM expects (B, C, H, W)")
        b, c, _, _ = x.shape
        mx = F.adaptive_max_pool2d(x, 1).flatten(1)
        av = F.adaptive_avg_pool2d(x, 1).flatten(1)
        w_c = torch.sigmoid(self.mlp(mx) + self.mlp(av)).view(b, c, 1, 1)
        x = x * w_c
        pooled = torch.cat([x.max(dim=1, keepdim=True).values,
                            x.mean(dim=1, keepdim=True)], dim=1)
        w_s = torch.sigmoid(self.spatial(pooled))
        return x * w_s


class SpectralConv2d(nn.Module):
    """Learnable Fourier multipliers on a truncated corner spectrum."""

    def __init__(self, in_channels, out_channels, modes_x, modes_y):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.modes_x = modes_x
        self.modes_y = modes_y
        scale = 1.0 / (in_channels * out_channels)
        self.weight = nn.Parameter(
            scale * torch.randn(2, in_channels, out_channels, modes_x, modes_y,
                                dtype=torch.cfloat))

    def forward(self, x):
        b, c, h, w = x.shape
        if self.modes_x > h // 2 + h % 2 or self.modes_y > w // 2 + 1:
            raise ValueError(
                f"retained modes ({self.modes_x},{self.modes_y}) exceed spectrum of {h}x{w}")
        spec = torch.fft.rfft2(x)
        weight = self.weight.to(spec.dtype)
        out = torch.zeros(b, self.out_channels, h, w // 2 + 1,
                          dtype=spec.dtype, device=x.device)
        mx, my = self.modes_x, self.modes_y
        out[:, :, :mx, :my] = torch.einsum(
            "bixy,ioxy->boxy", spec[:, :, :mx, :my], weight[0])
        out[:, :, -mx:, :my] = torch.einsum(
            "bixy,ioxy->boxy", spec[:, :, -mx:, :my], weight[1])
        return torch.fft.irfft2(out, s=(h, w))


class FNOLayer(nn.Module):
    """sigma(O x + IFFT(R FFT(x))) with a pointwise linear path O."""

    def __init__(self, channels, modes_x, modes_y, activation=None):
        super().__init__()
        self.spectral = SpectralConv2d(channels, channels, modes_x, modes_y)
        self.pointwise = nn.Conv2d(channels, channels, 1)
        self.activation = nn.GELU() if activation is None else activation

    def forward(self, x):
        return self.activation(self.pointwise(x) + self.spectral(x))


class AxisGatedMLP(nn.Module):
    """Gated linear mixing along one spatial axis (-1 = width, -2 = height)."""

    def __init__(self, size, axis, bias=True):
        super().__init__()
        self.axis = axis
        self.value = nn.Linear(size, size, bias=bias)
        self.gate = nn.Linear(size, size, bias=bias)

    def forward(self, x):
        moved = x.movedim(self.axis, -1)
        out = self.value(moved) * torch.sigmoid(self.gate(moved))
        return out.movedim(-1, self.axis)


def unfold_blocks(x, g):
    """(B, C, H, W) -> (B*g^2, C, H/g, W/g) non-overlapping partition."""
    b, c, h, w = x.shape
    if h % g or w % g:
        raise ValueError(f"spatial dims {h}x{w} not divisible by group {g}")
    x = x.reshape(b, c, g, h // g, g, w // g)
    return x.permute(0, 2, 4, 1, 3, 5).reshape(b * g * g, c, h // g, w // g)


def fold_blocks(x, g, batch):
    """Inverse of unfold_blocks."""
    bg, c, hb, wb = x.shape
    x = x.reshape(batch, g, g, c, hb, wb)
    return x.permute(0, 3, 1, 4, 2, 5).reshape(batch, c, g * hb, g * wb)


class MAFE(nn.Module):
    """Multi-axis feature extraction: global + blockwise axis-gated MLPs.

    The global response sums horizontal and vertical gated MLPs of the
    normalized map; the local response applies the same construction on a
    g x g partition and is folded back; a 1x1 projection fuses the two.
    """

    def __init__(self, channels, height, width, group=2, bias=True):
        super().__init__()
        self.group = group
        self.norm = nn.LayerNorm([height, width], elementwise_affine=bias)
        self.global_x = AxisGatedMLP(width, axis=-1, bias=bias)
        self.global_y = AxisGatedMLP(height, axis=-2, bias=bias)
        self.local_x = AxisGatedMLP(width // group, axis=-1, bias=bias)
        self.local_y = AxisGatedMLP(height // group, axis=-2, bias=bias)
        self.project = nn.Conv2d(channels, channels, 1, bias=bias)

    def forward(self, x):
        b, _, h, w = x.shape
        if h % self.group or w % self.group:
            raise ValueError(f"spatial dims {h}x{w} not divisible by group {self.group}")
        z = self.norm(x)
        g = self.global_x(z) + self.global_y(z)
        blocks = unfold_blocks(z, self.group)
        local = self.local_x(blocks) + self.local_y(blocks)
        u = g + fold_blocks(local, self.group, b)
        return self.project(u)
