"""Residual convolutional denoiser baseline."""

import torch
import torch.nn as nn
import torch.nn.functional as F


class DnCNN(nn.Module):
    """Predicts the noise component; the denoised field is input - output.

    Default 17 convolution layers with batch normalization and ReLU in the
    interior (shallower depths are used at toy scale).
    """

    def __init__(self, channels=2, depth=17, width=32):
        super().__init__()
        layers = [nn.Conv2d(channels, width, 3, padding=1), nn.ReLU(inplace=True)]
        for _ in range(depth - 2):
            layers += [nn.Conv2d(width, width, 3, padding=1, bias=False),
                       nn.BatchNorm2d(width), nn.ReLU(inplace=True)]
        layers.append(nn.Conv2d(width, channels, 3, padding=1))
        self.body = nn.Sequential(*layers)

    def forward(self, noisy):
        return self.body(noisy)


def denoise(noisy, net: DnCNN):
    """x_hat = y - v_hat."""
    with torch.no_grad():
        return noisy - net(torch.as_tensor(noisy, dtype=torch.float32))


def train_dncnn(clean, noisy, net=None, epochs=30, batch_size=16, lr=1e-3, seed=0,
                depth=7, width=24):
    """Fit the residual mapping on paired clean/noisy fields."""
    clean = torch.as_tensor(clean, dtype=torch.float32)
    noisy = torch.as_tensor(noisy, dtype=torch.float32)
    if net is None:
        net = DnCNN(channels=clean.shape[1], depth=depth, width=width)
    torch.manual_seed(seed)
    gen = torch.Generator().manual_seed(seed)
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    losses = []
    for _ in range(epochs):
        perm = torch.randperm(len(clean), generator=gen)
        total, count = 0.0, 0
        net.train()
        for start in range(0, len(clean), batch_size):
            idx = perm[start:start + batch_size]
            residual = noisy[idx] - clean[idx]
            loss = F.mse_loss(net(noisy[idx]), residual)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
            count += len(idx)
        losses.append(total / count)
    return net, losses


def psnr(reference, estimate):
    ref = torch.as_tensor(reference, dtype=torch.float32)
    est = torch.as_tensor(estimate, dtype=torch.float32)
    mse = F.mse_loss(est, ref).item()
    peak = float(ref.abs().max())
    if mse == 0:
        return float("inf")
    return 10.0 * torch.log10(torch.tensor(peak**2 / mse)).item()
