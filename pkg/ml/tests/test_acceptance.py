"""Secondary acceptance gate: loss mechanics, enrichment trend, diffusion
alignment, and the DDPM-vs-DnCNN comparison harness (all toy scale)."""

import time

import numpy as np
import pytest
import torch

from weldwave_ml.data import WeldSampleDataset, corrupt_fields
from weldwave_ml.diffusion import (
    DenoiserNet,
    NoiseSchedule,
    conditional_generate,
    forward_noise,
    guided_align,
    train_ddpm,
)
from weldwave_ml.dncnn import denoise, psnr, train_dncnn
from weldwave_ml.enrichment import train_enriched
from weldwave_ml.harness import compare_alignment, ood_corrupt
from weldwave_ml.losses import enrichment_weights, loss_inv, loss_seg
from weldwave_ml.unets import inversion_unet, segmentation_unet
from weldwave_ml.wfs import manifest_files

from tests.conftest import PooledStackDataset, mode_ks

pytestmark = pytest.mark.acceptance


def announce(name, detail):
    print(f"\nACCEPTANCE {name}: PASS ({detail})")


# ------------------------------------------------------- 1. ML mechanics

def test_ml_mechanics():
    # loss-schedule endpoints
    assert enrichment_weights(0.0) == (1.0, 1.0)
    assert enrichment_weights(0.5) == (0.5, 1.5)
    assert enrichment_weights(1.0) == (0.0, 2.0)

    # analytic constant-offset inversion loss
    pred = torch.zeros(1, 1, 16, 16)
    assert loss_inv(pred, pred + 0.1).item() == pytest.approx(0.012025, rel=1e-6)

    # finite-difference gradient checks through both networks
    def fd_check(model, loss_fn, target, x):
        model = model.double()
        x = x.double()
        target = target.double()
        loss_fn(model(x), target).backward()
        param = next(p for p in model.parameters() if p.dim() == 4)
        grad = param.grad.flatten()[0].item()
        h = 1e-5 * max(abs(param.data.flatten()[0].item()), 1.0)
        with torch.no_grad():
            param.flatten()[0] += h
            up = loss_fn(model(x), target).item()
            param.flatten()[0] -= 2 * h
            dn = loss_fn(model(x), target).item()
            param.flatten()[0] += h
        fd = (up - dn) / (2 * h)
        assert grad == pytest.approx(fd, rel=1e-3, abs=1e-9)
        return abs(grad - fd) / max(abs(fd), 1e-12)

    torch.manual_seed(1)
    r1 = fd_check(inversion_unet(grid=16, base=4, fno_modes=(4, 4)), loss_inv,
                  torch.rand(2, 1, 16, 16), torch.randn(2, 9, 16, 16))
    seg = segmentation_unet(grid=16, base=4)
    seg.eval()
    r2 = fd_check(seg, loss_seg, (torch.rand(2, 1, 16, 16) > 0.9).float(),
                  torch.randn(2, 9, 16, 16))
    announce("ml-mechanics", f"schedule endpoints exact, offset loss 0.012025, "
                             f"grad rel errs {r1:.1e}/{r2:.1e}")


# --------------------------------------------------- 2. enrichment trend

@pytest.mark.slow
def test_enrichment_trend(em_dataset_dir, nl_dataset_dir):
    t0 = time.perf_counter()
    em_train_files = manifest_files(em_dataset_dir, split="train")
    em_test = WeldSampleDataset(em_dataset_dir, split="test", limit=24)
    nl_train = WeldSampleDataset(nl_dataset_dir, split="train")
    nl_test = WeldSampleDataset(nl_dataset_dir, split="test")

    results = {}
    for n_em in (200, 20):
        torch.manual_seed(0)
        em_train = WeldSampleDataset(files=em_train_files, limit=n_em)
        model = inversion_unet(grid=64, base=8)
        results[n_em] = train_enriched(model, em_train, nl_train, em_test, nl_test,
                                       task="inversion", epochs=10, seed=0)
    best_200 = results[200].best_nl_test
    best_20 = results[20].best_nl_test
    assert best_200 <= best_20

    em_curve = [row["em_train"] for row in results[200].curves[:5]]
    assert all(b < a for a, b in zip(em_curve, em_curve[1:]))

    elapsed = time.perf_counter() - t0
    assert elapsed < 1800.0
    announce("enrichment-trend", f"best held-out NL loss {best_200:.4f} (200 EM) <= "
                                 f"{best_20:.4f} (20 EM); EM loss decreasing over "
                                 f"first 5 epochs; {elapsed:.0f} s")


# ------------------------------------------------- 3. diffusion alignment

@pytest.fixture(scope="module")
def ddpm_bundle(em_dataset_dir):
    train_ds = PooledStackDataset(manifest_files(em_dataset_dir, split="train"), factor=2)
    fields = train_ds.fields()
    schedule = NoiseSchedule()
    net, losses = train_ddpm(fields, schedule, net_kwargs={"base": 24},
                             epochs=50, batch_size=16, seed=0)
    return net, schedule, losses


@pytest.fixture(scope="module")
def seg32(em_dataset_dir, nl_dataset_dir):
    em_files = manifest_files(em_dataset_dir, split="train")[:120]
    em_train = PooledStackDataset(em_files, factor=2)
    em_test = PooledStackDataset(manifest_files(em_dataset_dir, split="test")[:24], factor=2)
    nl_train = PooledStackDataset(manifest_files(nl_dataset_dir, split="train"), factor=2)
    nl_test = PooledStackDataset(manifest_files(nl_dataset_dir, split="test"), factor=2)
    torch.manual_seed(0)
    model = segmentation_unet(grid=32, base=8)
    train_enriched(model, em_train, nl_train, em_test, nl_test,
                   task="segmentation", epochs=8, seed=0)
    model.eval()
    return model


@pytest.mark.slow
def test_diffusion_alignment(em_dataset_dir, nl_dataset_dir, ddpm_bundle, seg32):
    t0 = time.perf_counter()
    net, schedule, losses = ddpm_bundle

    # forward-noise marginals at t = T within 5%
    gen = torch.Generator().manual_seed(11)
    phi0 = torch.randn(1, 1, 128, 128, generator=gen)
    phi0 = phi0 / phi0.std()
    phi_T, _ = forward_noise(phi0, torch.tensor([schedule.T]), schedule, generator=gen)
    assert abs(phi_T.mean().item()) < 0.05
    assert phi_T.var().item() == pytest.approx(1.0, rel=0.05)

    # toy training converges
    drop = (losses[0] - losses[-1]) / losses[0]
    assert drop >= 0.30

    # conditional generation beats corrupted input MSE on >= 80% of 50 cases
    held = PooledStackDataset(manifest_files(em_dataset_dir, split="test")[:50], factor=2)
    clean = held.fields()
    corrupted = corrupt_fields(clean.numpy(), np.random.default_rng(3))
    generated = conditional_generate(corrupted, net, schedule,
                                     generator=torch.Generator().manual_seed(5))
    wins = 0
    for i in range(len(clean)):
        mse_gen = ((generated[i] - clean[i]) ** 2).mean().item()
        mse_cor = ((corrupted[i] - clean[i]) ** 2).mean().item()
        wins += int(mse_gen < mse_cor)
    assert wins >= 0.80 * len(clean)

    # guided alignment improves downstream segmentation on the synthetic OOD
    # protocol in >= 70% of 30 cases
    nl_files = manifest_files(nl_dataset_dir)
    nl_all = PooledStackDataset(nl_files, factor=2)
    nl_clean = nl_all.fields()
    ood = ood_corrupt(nl_clean.numpy(), np.random.default_rng(7))
    aligned = guided_align(ood, 250, net, schedule,
                           generator=torch.Generator().manual_seed(9))
    k_a0, k_s0, dx, dy = mode_ks(nl_dataset_dir)
    from weldwave_ml.data import build_stack_from_field
    seg_wins = 0
    with torch.no_grad():
        for i in range(len(nl_clean)):
            crack = nl_all.items[i][2][None]
            s_direct = loss_seg(seg32(build_stack_from_field(
                ood[i].numpy(), k_a0, k_s0, 2 * dx, 2 * dy)), crack).item()
            s_aligned = loss_seg(seg32(build_stack_from_field(
                aligned[i].numpy(), k_a0, k_s0, 2 * dx, 2 * dy)), crack).item()
            seg_wins += int(s_aligned < s_direct)
    assert seg_wins >= 0.70 * len(nl_clean)

    elapsed = time.perf_counter() - t0
    announce("diffusion-alignment", f"t=T marginals ok, loss drop {drop:.0%}, "
                                    f"generation wins {wins}/50, OOD seg wins "
                                    f"{seg_wins}/{len(nl_clean)}, {elapsed:.0f} s")


@pytest.mark.slow
def test_ddpm_vs_dncnn_harness(tmp_path, em_dataset_dir, nl_dataset_dir, ddpm_bundle, seg32):
    net, schedule, _ = ddpm_bundle
    train_fields = PooledStackDataset(
        manifest_files(em_dataset_dir, split="train")[:150], factor=2).fields()
    rng = np.random.default_rng(13)
    awgn = 0.4
    noisy = train_fields + torch.from_numpy(
        rng.normal(0, awgn * train_fields.numpy().std(), train_fields.shape)).float()
    dncnn, _ = train_dncnn(train_fields, noisy, epochs=20, seed=0, depth=7, width=24)
    dncnn.eval()

    # the residual baseline denoises its own training distribution
    held_clean = PooledStackDataset(
        manifest_files(em_dataset_dir, split="test")[:12], factor=2).fields()
    held_noisy = held_clean + torch.from_numpy(
        rng.normal(0, awgn * held_clean.numpy().std(), held_clean.shape)).float()
    den = denoise(held_noisy, dncnn)
    assert psnr(held_clean, den) > psnr(held_clean, held_noisy)

    # paired comparison on the OOD protocol
    nl_all = PooledStackDataset(manifest_files(nl_dataset_dir), factor=2)
    clean = nl_all.fields()
    ood = ood_corrupt(clean.numpy(), np.random.default_rng(17))
    k_a0, k_s0, dx, dy = mode_ks(nl_dataset_dir)
    csv_path = tmp_path / "ddpm_vs_dncnn.csv"
    rows, aligned, cnn = compare_alignment(
        clean, ood, net, schedule, dncnn, t_star=250,
        seg_model=seg32, seg_targets=[it[2] for it in nl_all.items],
        seg_loss=loss_seg, seed=21, csv_path=csv_path,
        stack_info=(k_a0, k_s0, 2 * dx, 2 * dy))
    assert csv_path.exists()
    header = csv_path.read_text().splitlines()[0]
    for col in ("mse_ddpm", "mse_dncnn", "psnr_ddpm", "psnr_dncnn",
                "segloss_ddpm", "segloss_dncnn"):
        assert col in header

    ddpm_mse_wins = sum(r["mse_ddpm"] <= r["mse_dncnn"] for r in rows)
    assert ddpm_mse_wins >= 0.5 * len(rows)
    announce("ddpm-vs-dncnn", f"harness CSV with {len(rows)} paired cases; DDPM wins "
                              f"{ddpm_mse_wins}/{len(rows)} on OOD MSE")
