"""Joint EM/NL enrichment training with the epoch-dependent loss schedule."""

import csv
from dataclasses import dataclass, field

import numpy as np
import torch
from torch.utils.data import DataLoader

from .losses import enrichment_weights, loss_inv, loss_seg


@dataclass
class TrainResult:
    curves: list = field(default_factory=list)  # per-epoch dicts
    best_nl_test: float = float("inf")

    def write_csv(self, path):
        if not self.curves:
            return
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.curves[0].keys()))
            writer.writeheader()
            writer.writerows(self.curves)


def _epoch_loss(model, loader, loss_fn, task):
    model.eval()
    total, n = 0.0, 0
    with torch.no_grad():
        for stack, stiff, crack in loader:
            target = stiff if task == "inversion" else crack
            total += loss_fn(model(stack), target).item() * len(stack)
            n += len(stack)
    return total / max(n, 1)


def train_enriched(model, em_train, nl_train, em_test, nl_test, task="inversion",
                   epochs=100, batch_size=8, lr=1e-3, lr_decay=None, seed=0):
    """Minimize varpi_EM(e) L_EM + varpi_NL(e) L_NL over the relative epoch e.

    EM batches drive the epoch length (the enrichment set is the large one);
    NL batches recycle.  Emits train/test loss curves for both provenances.
    """
    if len(em_train) == 0 or len(nl_train) == 0:
        raise ValueError("both training sets must be non-empty")
    if lr_decay is None:
        lr_decay = 0.98 if task == "inversion" else 0.95
    loss_fn = loss_inv if task == "inversion" else loss_seg
    torch.manual_seed(seed)
    gen = torch.Generator().manual_seed(seed)
    em_loader = DataLoader(em_train, batch_size=batch_size, shuffle=True, generator=gen)
    nl_loader = DataLoader(nl_train, batch_size=min(batch_size, len(nl_train)),
                           shuffle=True, generator=torch.Generator().manual_seed(seed + 1))
    em_eval = DataLoader(em_train, batch_size=batch_size)
    nl_eval = DataLoader(nl_train, batch_size=batch_size)
    em_test_loader = DataLoader(em_test, batch_size=batch_size)
    nl_test_loader = DataLoader(nl_test, batch_size=batch_size)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    sched = torch.optim.lr_scheduler.ExponentialLR(opt, gamma=lr_decay)

    result = TrainResult()
    for epoch in range(epochs):
        e_rel = epoch / max(epochs - 1, 1)
        w_em, w_nl = enrichment_weights(e_rel)
        model.train()
        nl_iter = iter(nl_loader)
        for stack_em, stiff_em, crack_em in em_loader:
            try:
                stack_nl, stiff_nl, crack_nl = next(nl_iter)
            except StopIteration:
                nl_iter = iter(nl_loader)
                stack_nl, stiff_nl, crack_nl = next(nl_iter)
            tgt_em = stiff_em if task == "inversion" else crack_em
            tgt_nl = stiff_nl if task == "inversion" else crack_nl
            loss = w_em * loss_fn(model(stack_em), tgt_em) \
                + w_nl * loss_fn(model(stack_nl), tgt_nl)
            opt.zero_grad()
            loss.backward()
            opt.step()
        sched.step()

        row = {
            "epoch": epoch,
            "w_em": w_em,
            "w_nl": w_nl,
            "em_train": _epoch_loss(model, em_eval, loss_fn, task),
            "em_test": _epoch_loss(model, em_test_loader, loss_fn, task),
            "nl_train": _epoch_loss(model, nl_eval, loss_fn, task),
            "nl_test": _epoch_loss(model, nl_test_loader, loss_fn, task),
            "lr": opt.param_groups[0]["lr"],
        }
        result.curves.append(row)
        result.best_nl_test = min(result.best_nl_test, row["nl_test"])
    return result
