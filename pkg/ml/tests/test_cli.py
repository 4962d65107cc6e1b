import numpy as np
import pytest
import torch
from click.testing import CliRunner

from weldwave_ml.cli import main
from weldwave_ml.wfs import manifest_files, read_sample


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.mark.slow
def test_train_inversion_cli(runner, tmp_path, em_dataset_dir, nl_dataset_dir):
    out = tmp_path / "run"
    res = runner.invoke(main, ["train-inversion", "--em-dir", str(em_dataset_dir),
                               "--nl-dir", str(nl_dataset_dir), "--epochs", "2",
                               "--base-width", "4", "--out-dir", str(out)])
    assert res.exit_code == 0, res.output
    assert (out / "inversion.pt").exists()
    curves = (out / "inversion_curves.csv").read_text().splitlines()
    assert curves[0].startswith("epoch,w_em,w_nl,em_train")
    assert len(curves) == 3


@pytest.mark.slow
def test_train_ddpm_and_align_cli(runner, tmp_path, em_dataset_dir):
    ckpt = tmp_path / "ddpm.pt"
    res = runner.invoke(main, ["train-ddpm", "--dataset-dir", str(em_dataset_dir),
                               "--epochs", "1", "--base-width", "4",
                               "--seed", "0", "--out", str(ckpt)])
    assert res.exit_code == 0, res.output
    assert ckpt.exists()

    scan = manifest_files(em_dataset_dir, split="test")[0]
    out_wfs = tmp_path / "aligned.wfs"
    res = runner.invoke(main, ["align", "--scan", str(scan), "--tstar", "10",
                               "--ckpt", str(ckpt), "--out", str(out_wfs)])
    assert res.exit_code == 0, res.output
    rec = read_sample(out_wfs)
    assert rec.provenance == "Generated"
    assert rec.channels.shape[0] == 3
    assert "guided_align:tstar=10" in rec.params["processing"]
    mag = np.hypot(rec.channels[0].astype(float), rec.channels[1].astype(float))
    assert np.allclose(rec.channels[2], mag, atol=1e-6)
