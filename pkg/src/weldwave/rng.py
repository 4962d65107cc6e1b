"""Deterministic per-sample random streams.

Every stochastic quantity in the toolkit draws from a Generator derived from
(dataset_seed, sample_index, substream_id).  Streams are independent, so
samples may be generated in any order or on any number of workers and still
produce bit-identical output.
"""

import numpy as np

# Substream ids, one per stochastic subsystem of a sample.
SUB_PARAMS = 0
SUB_BEADS = 1
SUB_VARIATION = 2
SUB_CRACK = 3
SUB_CORRUPTION = 4


def substream(dataset_seed: int, sample_index: int, substream_id: int) -> np.random.Generator:
    """Generator for one (sample, subsystem) pair."""
    ss = np.random.SeedSequence((int(dataset_seed), int(sample_index), int(substream_id)))
    return np.random.Generator(np.random.PCG64(ss))


def single(seed: int) -> np.random.Generator:
    """Generator for standalone (non-dataset) use."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
