"""Conditional denoising diffusion for wavefield distribution alignment.

Fields are diffused as 2-channel (re, im) tensors of the normalized complex
wavefield.  The conditioning field is concatenated along channels at every
step; training randomly corrupts the condition (and occasionally zeroes it
outright) so the reverse process never over-relies on it.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .data import corrupt_fields


@dataclass
class NoiseSchedule:
    """Linear beta schedule with the abar_0 = 1 convention (index 0 unused
    by steps; arrays have length T+1)."""

    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    beta: np.ndarray = field(init=False)
    alpha: np.ndarray = field(init=False)
    alpha_bar: np.ndarray = field(init=False)

    def __post_init__(self):
        beta = np.concatenate([[0.0], np.linspace(self.beta_start, self.beta_end, self.T)])
        self.beta = beta
        self.alpha = 1.0 - beta
        self.alpha_bar = np.cumprod(self.alpha)
        if not (0 < beta[1] < beta[-1] < 1):
            raise ValueError("schedule endpoints out of range")
        if self.alpha_bar[-1] > 1e-4:
            raise ValueError("terminal alpha_bar too large; noise never saturates")

    def sigma(self, t):
        """Posterior std for the reverse kernel at step t (0 at t=1)."""
        t = np.asarray(t)
        ab_t = self.alpha_bar[t]
        ab_prev = self.alpha_bar[t - 1]
        var = (1.0 - ab_prev) / (1.0 - ab_t) * self.beta[t]
        return np.sqrt(np.maximum(var, 0.0))


def forward_noise(phi0, t, schedule: NoiseSchedule, generator=None):
    """phi_t = sqrt(abar_t) phi0 + sqrt(1-abar_t) eps; returns (phi_t, eps)."""
    phi0 = torch.as_tensor(phi0)
    t_arr = torch.as_tensor(t, dtype=torch.long).reshape(-1)
    if torch.any(t_arr < 0) or torch.any(t_arr > schedule.T):
        raise ValueError("timestep outside [0, T]")
    eps = torch.randn(phi0.shape, generator=generator, dtype=phi0.dtype)
    if len(t_arr) == 1:
        ab = float(schedule.alpha_bar[int(t_arr[0])])
        phi_t = math.sqrt(ab) * phi0 + math.sqrt(1 - ab) * eps
    else:
        ab = torch.as_tensor(schedule.alpha_bar, dtype=phi0.dtype)[t_arr]
        ab = ab.reshape((-1,) + (1,) * (phi0.dim() - 1))
        phi_t = torch.sqrt(ab) * phi0 + torch.sqrt(1 - ab) * eps
    return phi_t, eps


def reverse_step(phi_t, t, eps_hat, schedule: NoiseSchedule, generator=None):
    """One ancestral step: mean from the predicted noise plus sigma_t z
    (z = 0 at t = 1)."""
    if int(t) < 1:
        raise ValueError("reverse steps run for t >= 1")
    t = int(t)
    a_t = float(schedule.alpha[t])
    ab_t = float(schedule.alpha_bar[t])
    mu = (phi_t - (1.0 - a_t) / math.sqrt(1.0 - ab_t) * eps_hat) / math.sqrt(a_t)
    if t == 1:
        return mu
    sigma = float(schedule.sigma(t))
    z = torch.randn(phi_t.shape, generator=generator, dtype=phi_t.dtype)
    return mu + sigma * z


class _TimeEmbedding(nn.Module):
    def __init__(self, dim):
        super().__init__()
        self.dim = dim
        self.mlp = nn.Sequential(nn.Linear(dim, dim), nn.SiLU(), nn.Linear(dim, dim))

    def forward(self, t):
        half = self.dim // 2
        freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float32) / half)
        ang = t.float()[:, None] * freqs[None]
        emb = torch.cat([torch.sin(ang), torch.cos(ang)], dim=1)
        return self.mlp(emb)


class _SelfAttention2d(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.norm = nn.GroupNorm(1, channels)
        self.qkv = nn.Conv2d(channels, 3 * channels, 1)
        self.out = nn.Conv2d(channels, channels, 1)

    def forward(self, x):
        b, c, h, w = x.shape
        q, k, v = self.qkv(self.norm(x)).chunk(3, dim=1)
        q = q.reshape(b, c, h * w).transpose(1, 2)
        k = k.reshape(b, c, h * w)
        v = v.reshape(b, c, h * w).transpose(1, 2)
        attn = torch.softmax(q @ k / math.sqrt(c), dim=-1)
        return x + self.out((attn @ v).transpose(1, 2).reshape(b, c, h, w))


class _DenoiserBlock(nn.Module):
    def __init__(self, cin, cout, t_dim):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.emb = nn.Linear(t_dim, cout)
        self.norm1 = nn.GroupNorm(1, cout)
        self.norm2 = nn.GroupNorm(1, cout)

    def forward(self, x, temb):
        h = F.silu(self.norm1(self.conv1(x)))
        h = h + self.emb(temb)[:, :, None, None]
        return F.silu(self.norm2(self.conv2(h)))


class DenoiserNet(nn.Module):
    """Attention U-Net noise predictor with sinusoidal timestep encoding.

    Five blocks across three resolutions (2 down, bottleneck with
    self-attention, 2 up); input is the noisy field concatenated with the
    conditioning field along channels.
    """

    def __init__(self, field_channels=2, base=24, t_dim=64):
        super().__init__()
        cin = 2 * field_channels
        self.t_embed = _TimeEmbedding(t_dim)
        self.enc1 = _DenoiserBlock(cin, base, t_dim)
        self.enc2 = _DenoiserBlock(base, 2 * base, t_dim)
        self.mid = _DenoiserBlock(2 * base, 2 * base, t_dim)
        self.attn = _SelfAttention2d(2 * base)
        self.up2 = nn.ConvTranspose2d(2 * base, 2 * base, 2, stride=2)
        self.dec2 = _DenoiserBlock(4 * base, base, t_dim)
        self.up1 = nn.ConvTranspose2d(base, base, 2, stride=2)
        self.dec1 = _DenoiserBlock(2 * base, base, t_dim)
        self.head = nn.Conv2d(base, field_channels, 1)

    def forward(self, phi_t, t, condition):
        temb = self.t_embed(torch.as_tensor(t).reshape(-1))
        x = torch.cat([phi_t, condition], dim=1)
        e1 = self.enc1(x, temb)
        e2 = self.enc2(F.avg_pool2d(e1, 2), temb)
        m = self.attn(self.mid(F.avg_pool2d(e2, 2), temb))
        d2 = self.dec2(torch.cat([self.up2(m), e2], dim=1), temb)
        d1 = self.dec1(torch.cat([self.up1(d2), e1], dim=1), temb)
        return self.head(d1)


class DdpmTrainer:
    """Noise-prediction training with synthetically corrupted conditions.

    Conditions are freshly corrupted every epoch; with probability
    `condition_dropout` a condition is zeroed outright.  All randomness runs
    off captured generator states so a reloaded checkpoint reproduces the
    next epoch bit-for-bit.
    """

    def __init__(self, fields, schedule: NoiseSchedule, net=None, batch_size=16,
                 lr=1e-3, seed=0, condition_dropout=0.1, corruption_kwargs=None,
                 net_kwargs=None):
        self.fields = torch.as_tensor(fields, dtype=torch.float32)
        if len(self.fields) == 0:
            raise ValueError("empty training set")
        self.schedule = schedule
        # seed before any parameter construction so results are process-independent
        torch.manual_seed(seed)
        if net is None:
            net = DenoiserNet(field_channels=self.fields.shape[1], **(net_kwargs or {}))
        self.net = net
        self.gen = torch.Generator().manual_seed(seed + 1)
        self.rng = np.random.Generator(np.random.PCG64(seed + 2))
        self.opt = torch.optim.Adam(self.net.parameters(), lr=lr)
        self.batch_size = batch_size
        self.condition_dropout = condition_dropout
        self.corruption_kwargs = corruption_kwargs or {}
        self.losses = []

    def run_epoch(self) -> float:
        fields = self.fields
        perm = torch.randperm(len(fields), generator=self.gen)
        conditions = corrupt_fields(fields.numpy(), self.rng, **self.corruption_kwargs)
        drop = torch.from_numpy(self.rng.uniform(size=len(fields)) < self.condition_dropout)
        conditions[drop] = 0.0
        self.net.train()
        epoch_loss, count = 0.0, 0
        for start in range(0, len(fields), self.batch_size):
            idx = perm[start:start + self.batch_size]
            t = torch.randint(1, self.schedule.T + 1, (len(idx),), generator=self.gen)
            phi_t, eps = forward_noise(fields[idx], t, self.schedule, generator=self.gen)
            loss = F.mse_loss(self.net(phi_t, t, conditions[idx]), eps)
            self.opt.zero_grad()
            loss.backward()
            self.opt.step()
            epoch_loss += loss.item() * len(idx)
            count += len(idx)
        mean = epoch_loss / count
        self.losses.append(mean)
        return mean

    def state_dict(self):
        import copy
        return {
            "model": {k: v.detach().clone() for k, v in self.net.state_dict().items()},
            "optimizer": copy.deepcopy(self.opt.state_dict()),
            "torch_gen": self.gen.get_state().clone(),
            "np_rng": copy.deepcopy(self.rng.bit_generator.state),
            "losses": list(self.losses),
        }

    def load_state_dict(self, state):
        self.net.load_state_dict(state["model"])
        self.opt.load_state_dict(state["optimizer"])
        self.gen.set_state(state["torch_gen"])
        self.rng.bit_generator.state = state["np_rng"]
        self.losses = list(state["losses"])


def train_ddpm(fields, schedule: NoiseSchedule, net=None, epochs=150, batch_size=16,
               lr=1e-3, seed=0, condition_dropout=0.1, corruption_kwargs=None,
               log_every=None, net_kwargs=None):
    """Train the conditional noise predictor; returns (net, epoch losses)."""
    trainer = DdpmTrainer(fields, schedule, net=net, batch_size=batch_size, lr=lr,
                          seed=seed, condition_dropout=condition_dropout,
                          corruption_kwargs=corruption_kwargs, net_kwargs=net_kwargs)
    for epoch in range(epochs):
        loss = trainer.run_epoch()
        if log_every and (epoch + 1) % log_every == 0:
            print(f"  ddpm epoch {epoch + 1}/{epochs}: loss {loss:.4f}")
    return trainer.net, trainer.losses


@torch.no_grad()
def conditional_generate(condition, net, schedule: NoiseSchedule, generator=None,
                         t_start=None):
    """Full (or abbreviated) reverse chain conditioned at every step."""
    condition = torch.as_tensor(condition, dtype=torch.float32)
    if condition.dim() == 3:
        condition = condition[None]
    t_start = schedule.T if t_start is None else int(t_start)
    phi = torch.randn(condition.shape, generator=generator, dtype=condition.dtype)
    return _reverse_chain(phi, t_start, condition, net, schedule, generator)


@torch.no_grad()
def _reverse_chain(phi, t_start, condition, net, schedule, generator):
    net.eval()
    for t in range(t_start, 0, -1):
        tt = torch.full((len(phi),), t, dtype=torch.long)
        eps_hat = net(phi, tt, condition)
        phi = reverse_step(phi, t, eps_hat, schedule, generator=generator)
    return phi


@torch.no_grad()
def guided_align(scan, t_star, net, schedule: NoiseSchedule, generator=None):
    """Forward-noise an out-of-distribution field to t_star, then reverse
    back to t = 0 conditioned on the raw field."""
    scan = torch.as_tensor(scan, dtype=torch.float32)
    squeeze = scan.dim() == 3
    if squeeze:
        scan = scan[None]
    if not 0 <= int(t_star) <= schedule.T:
        raise ValueError("t_star outside [0, T]")
    if int(t_star) == 0:
        return scan[0] if squeeze else scan
    phi_t, _ = forward_noise(scan, torch.full((len(scan),), int(t_star)), schedule,
                             generator=generator)
    out = _reverse_chain(phi_t, int(t_star), scan, net, schedule, generator)
    return out[0] if squeeze else out


def save_checkpoint(path, net, opt=None, extra=None):
    state = {"model": net.state_dict(), "torch_rng": torch.get_rng_state(),
             "extra": extra or {}}
    if opt is not None:
        state["optimizer"] = opt.state_dict()
    torch.save(state, path)


def load_checkpoint(path, net, opt=None):
    state = torch.load(path, weights_only=False)
    net.load_state_dict(state["model"])
    torch.set_rng_state(state["torch_rng"])
    if opt is not None and "optimizer" in state:
        opt.load_state_dict(state["optimizer"])
    return state.get("extra", {})
