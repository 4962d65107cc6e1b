"""Composite training objectives for inversion and segmentation."""

import torch
import torch.nn.functional as F

# inversion weights
W1, W2, W3 = 1.0, 0.1, 0.25
# segmentation weights
W4, W5 = 1.0, 35.0
POSITIVE_WEIGHT = 25.0
_EPS = 1e-7


def loss_inv(pred, target, w1=W1, w2=W2, w3=W3):
    """MSE + forward-difference gradient MSE + a focal term that damps the
    quadratic error as it approaches 1 (inputs normalized accordingly)."""
    err = target - pred
    mse = (err**2).mean()
    gx = torch.diff(err, dim=-1)
    gy = torch.diff(err, dim=-2)
    grad = (gx**2).mean() + (gy**2).mean()
    damp = torch.clamp(1.0 - err.abs(), 0.0, 1.0)
    focal = (err**2 * damp**2).mean()
    return w1 * mse + w2 * grad + w3 * focal


def loss_seg(pred, target, w4=W4, w5=W5, pos_weight=POSITIVE_WEIGHT):
    """Positively weighted BCE plus a true-positive-emphasizing overlap term.

    The overlap denominator uses the raw prediction so the degenerate
    both-empty case is well defined (term set to 0).
    """
    t = target.to(pred.dtype)
    p = pred.clamp(_EPS, 1.0 - _EPS)
    bce = -(pos_weight * t * torch.log(p) + (1 - t) * torch.log(1 - p)).mean()
    denom = pred.sum() + t.sum()
    if denom.item() == 0.0:
        dice = torch.zeros((), dtype=pred.dtype, device=pred.device)
    else:
        dice = 1.0 - 2.0 * (pred * t).sum() / denom
    return w4 * bce + w5 * dice


def enrichment_weights(relative_epoch):
    """Per-epoch weighting of the reduced-order and high-fidelity losses."""
    e = float(relative_epoch)
    return 1.0 - e, 1.0 + e
