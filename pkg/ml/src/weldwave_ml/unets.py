"""Inversion and segmentation U-Nets (5 encoder/decoder blocks)."""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .blocks import CBAM, MAFE, FNOLayer


def _conv_block(cin, cout, batchnorm):
    layers = [nn.Conv2d(cin, cout, 3, padding=1)]
    if batchnorm:
        layers.append(nn.BatchNorm2d(cout))
    layers += [nn.ReLU(inplace=True), nn.Conv2d(cout, cout, 3, padding=1)]
    if batchnorm:
        layers.append(nn.BatchNorm2d(cout))
    layers.append(nn.ReLU(inplace=True))
    return nn.Sequential(*layers)


class _EncBlock(nn.Module):
    def __init__(self, cin, cout, batchnorm):
        super().__init__()
        self.conv = _conv_block(cin, cout, batchnorm)
        self.attn = CBAM(cout)

    def forward(self, x):
        return self.attn(self.conv(x))


class WeldUNet(nn.Module):
    """Shared 5-level encoder/decoder; variant hooks inject the
    inversion-specific FNO skips or the segmentation MAFE bottleneck."""

    DEPTH = 5

    def __init__(self, in_channels=9, base=16, grid=64, batchnorm=False,
                 fno_skips=False, fno_modes=(16, 16), mafe_bottleneck=False,
                 mafe_group=2, head="softplus"):
        super().__init__()
        widths = [base * 2**min(i, 3) for i in range(self.DEPTH)]
        self.encoders = nn.ModuleList()
        self.skip_ops = nn.ModuleList()
        cin = in_channels
        size = grid
        for i, w in enumerate(widths):
            self.encoders.append(_EncBlock(cin, w, batchnorm))
            if fno_skips and i < self.DEPTH - 1:
                mx = min(fno_modes[0], size // 2)
                my = min(fno_modes[1], size // 2 + 1)
                self.skip_ops.append(FNOLayer(w, mx, my))
            else:
                self.skip_ops.append(nn.Identity())
            cin = w
            if i < self.DEPTH - 1:
                size //= 2
        use_mafe = mafe_bottleneck and size % mafe_group == 0 and size >= mafe_group
        self.bottleneck_extra = (
            MAFE(widths[-1], size, size, group=mafe_group) if use_mafe
            else nn.Identity())
        self.decoders = nn.ModuleList()
        self.upconvs = nn.ModuleList()
        for i in range(self.DEPTH - 1, 0, -1):
            self.upconvs.append(nn.ConvTranspose2d(widths[i], widths[i - 1], 2, stride=2))
            self.decoders.append(_EncBlock(2 * widths[i - 1], widths[i - 1], batchnorm))
        self.head_conv = nn.Conv2d(widths[0], 1, 1)
        self.head = head

    def forward(self, x):
        skips = []
        for i, enc in enumerate(self.encoders):
            x = enc(x)
            if i < self.DEPTH - 1:
                skips.append(self.skip_ops[i](x))
                x = F.max_pool2d(x, 2)
        x = x + self.bottleneck_extra(x) if not isinstance(
            self.bottleneck_extra, nn.Identity) else x
        for up, dec, skip in zip(self.upconvs, self.decoders, reversed(skips)):
            x = up(x)
            x = dec(torch.cat([x, skip], dim=1))
        x = self.head_conv(x)
        if self.head == "softplus":
            return F.softplus(x)
        if self.head == "sigmoid":
            return torch.sigmoid(x)
        return x


def inversion_unet(grid=64, base=16, fno_modes=(16, 16)) -> WeldUNet:
    """Stiffness-map regressor: CBAM conv blocks, FNO skip connections,
    positive (softplus) head, no batch normalization."""
    return WeldUNet(in_channels=9, base=base, grid=grid, batchnorm=False,
                    fno_skips=True, fno_modes=fno_modes, head="softplus")


def segmentation_unet(grid=64, base=16, mafe_group=2) -> WeldUNet:
    """Crack detector: batch-normalized CBAM conv blocks, MAFE bottleneck,
    sigmoid head."""
    return WeldUNet(in_channels=9, base=base, grid=grid, batchnorm=True,
                    fno_skips=False, mafe_bottleneck=True, mafe_group=mafe_group,
                    head="sigmoid")
