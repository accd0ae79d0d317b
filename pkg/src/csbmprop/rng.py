"""Seeded random streams.

Every random quantity is drawn from a PCG64 generator whose SeedSequence is
keyed by (master seed, purpose, ...).  Labels, edges and attributes therefore
live on separate streams: changing the attribute dimension does not perturb
the sampled topology, and two runs that share a seed but differ only in their
attribute means see identical noise.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "numpy.PCG64/SeedSequence"
GENERATOR_VERSION = 1

LABELS = 0
EDGES = 1
ATTRIBUTES = 2
INIT = 3
MC = 4


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(master: int, *indices: int) -> int:
    """64-bit child seed for (master, indices); stable across runs and platforms."""
    ss = np.random.SeedSequence([int(master) & ((1 << 64) - 1), *[int(i) for i in indices]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generator_info() -> dict:
    return {"generator": GENERATOR_NAME, "version": GENERATOR_VERSION, "numpy": np.__version__}
