"""Training and alignment commands for the learning components."""

import json
from pathlib import Path

import click
import numpy as np
import torch

from . import __version__
from .data import WeldSampleDataset
from .diffusion import (
    DenoiserNet,
    NoiseSchedule,
    guided_align,
    load_checkpoint,
    save_checkpoint,
    train_ddpm,
)
from .enrichment import train_enriched
from .unets import inversion_unet, segmentation_unet
from .wfs import Sample, read_sample, write_sample


@click.group()
@click.version_option(__version__)
def main():
    """Inversion/segmentation training and diffusion alignment."""


@main.command("train-inversion")
@click.option("--em-dir", type=click.Path(exists=True), required=True)
@click.option("--nl-dir", type=click.Path(exists=True), required=True)
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--base-width", type=int, default=16, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--task", type=click.Choice(["inversion", "segmentation"]),
              default="inversion", show_default=True)
def train_inversion(em_dir, nl_dir, epochs, base_width, seed, out_dir, task):
    """Enrichment-schedule training of an inversion or segmentation U-Net."""
    em_train = WeldSampleDataset(em_dir, split="train")
    em_test = WeldSampleDataset(em_dir, split="test")
    nl_train = WeldSampleDataset(nl_dir, split="train")
    nl_test = WeldSampleDataset(nl_dir, split="test")
    grid = em_train[0][0].shape[-1]
    model = (inversion_unet(grid=grid, base=base_width) if task == "inversion"
             else segmentation_unet(grid=grid, base=base_width))
    result = train_enriched(model, em_train, nl_train, em_test, nl_test,
                            task=task, epochs=epochs, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.save({"model": model.state_dict(),
                "config": {"task": task, "grid": grid, "base": base_width}},
               out / f"{task}.pt")
    result.write_csv(out / f"{task}_curves.csv")
    click.echo(f"best held-out NL loss {result.best_nl_test:.5f}; "
               f"checkpoint and curves -> {out_dir}")


@main.command("train-ddpm")
@click.option("--dataset-dir", type=click.Path(exists=True), required=True)
@click.option("--epochs", type=int, default=150, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--base-width", type=int, default=24, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def train_ddpm_cmd(dataset_dir, epochs, seed, base_width, out_path):
    """Train the conditional denoising diffusion model on clean wavefields."""
    ds = WeldSampleDataset(dataset_dir, split="train")
    fields = ds.complex_fields()
    schedule = NoiseSchedule()
    net = DenoiserNet(base=base_width)
    net, losses = train_ddpm(fields, schedule, net=net, epochs=epochs, seed=seed,
                             log_every=max(1, epochs // 10))
    save_checkpoint(out_path, net, extra={
        "schedule": {"T": schedule.T, "beta_start": schedule.beta_start,
                     "beta_end": schedule.beta_end},
        "base": base_width, "final_loss": losses[-1]})
    click.echo(f"final training loss {losses[-1]:.4f} -> {out_path}")


@main.command()
@click.option("--scan", "scan_path", type=click.Path(exists=True), required=True)
@click.option("--tstar", type=int, default=250, show_default=True)
@click.option("--ckpt", "ckpt_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
def align(scan_path, tstar, ckpt_path, out_path, seed):
    """Guided partial diffusion of a stored scan into the training
    distribution; writes the generated field as a WFS file."""
    sample = read_sample(scan_path)
    field = torch.from_numpy(sample.channels[:2].astype(np.float32))
    state = torch.load(ckpt_path, weights_only=False)
    sched_cfg = state["extra"]["schedule"]
    schedule = NoiseSchedule(T=sched_cfg["T"], beta_start=sched_cfg["beta_start"],
                             beta_end=sched_cfg["beta_end"])
    net = DenoiserNet(base=state["extra"].get("base", 24))
    load_checkpoint(ckpt_path, net)
    out_field = guided_align(field, tstar, net, schedule,
                             generator=torch.Generator().manual_seed(seed))
    re, im = out_field[0].numpy(), out_field[1].numpy()
    mag = np.hypot(re, im)
    channels = np.stack([re, im, mag]).astype(np.float32)
    params = dict(sample.params)
    params.setdefault("processing", []).append(f"guided_align:tstar={tstar}")
    out = Sample(channels=channels, label_stiffness=sample.label_stiffness,
                 label_crack=sample.label_crack, params=params, dx=sample.dx,
                 dy=sample.dy, freq_hz=sample.freq_hz, provenance="Generated")
    write_sample(out_path, out)
    click.echo(f"aligned field -> {out_path}")


if __name__ == "__main__":
    main()
