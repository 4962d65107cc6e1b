"""Shared fixtures: toy datasets generated through the simulator CLI.

The learning package consumes the simulator exclusively through its external
interfaces (the `weldwave` CLI and the WFS format), so fixtures shell out.
"""

import json
import subprocess

import numpy as np
import pytest
import torch

from weldwave_ml.data import WeldSampleDataset, build_stack_from_field
from weldwave_ml.wfs import manifest_files, read_sample

DIMS = [0.05, 0.05]
FREQ_KHZ = 100.0
GRID = 64


def _gen(out_dir, model, count, seed, workers=2):
    params = out_dir.parent / f"params_{model}_{seed}.json"
    params.write_text(json.dumps({"dims": DIMS}))
    cmd = ["weldwave", "gen-dataset", "--class", "coupon", "--model", model,
           "--count", str(count), "--seed", str(seed), "--grid", str(GRID),
           "--out-dir", str(out_dir), "--freq-khz", str(FREQ_KHZ),
           "--workers", str(workers), "--params", str(params)]
    subprocess.run(cmd, check=True, capture_output=True, text=True)
    return out_dir


@pytest.fixture(scope="session")
def em_dataset_dir(tmp_path_factory):
    return _gen(tmp_path_factory.mktemp("data") / "em", "em", 500, seed=101)


@pytest.fixture(scope="session")
def nl_dataset_dir(tmp_path_factory):
    return _gen(tmp_path_factory.mktemp("data") / "nl", "nl", 30, seed=202)


@pytest.fixture(scope="session")
def em_dataset(em_dataset_dir):
    return WeldSampleDataset(em_dataset_dir, split="train")


def mode_ks(dataset_dir):
    sample = read_sample(manifest_files(dataset_dir)[0])
    ks = sample.params["mode_wavenumbers"]
    return ks["A0"], ks["S0"], sample.dx, sample.dy


class PooledStackDataset(torch.utils.data.Dataset):
    """Stacks rebuilt at a pooled resolution so training inputs and
    restored-field inputs share one preprocessing path."""

    def __init__(self, files, factor=2):
        self.items = []
        for f in files:
            s = read_sample(f)
            ks = s.params["mode_wavenumbers"]
            field = torch.from_numpy(s.channels[:2].astype(np.float32))[None]
            pooled = torch.nn.functional.avg_pool2d(field, factor)[0].numpy()
            stack = build_stack_from_field(pooled, ks["A0"], ks["S0"],
                                           s.dx * factor, s.dy * factor)[0]
            stiff = torch.nn.functional.avg_pool2d(
                torch.from_numpy(s.label_stiffness.astype(np.float32))[None, None], factor)[0]
            crack = torch.nn.functional.max_pool2d(
                torch.from_numpy(s.label_crack.astype(np.float32))[None, None], factor)[0]
            self.items.append((stack, stiff, crack, pooled))

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i][:3]

    def fields(self):
        return torch.from_numpy(np.stack([it[3] for it in self.items]))
