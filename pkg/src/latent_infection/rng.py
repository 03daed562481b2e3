"""Seeded random streams.

Every random draw in the package comes from a PCG64 generator keyed by
``(master_seed, *key)`` through :class:`numpy.random.SeedSequence`'s spawn
key. Keys are small integer tuples, conventionally
``(phase, run_index, stage)``; two different keys give statistically
independent streams, and adding a new consumer with a fresh key never
perturbs existing streams.
"""

from __future__ import annotations

import numpy as np

# stage tags
CASCADE = 0
OBSERVE = 1
PREDICT = 2
FIT = 3

# phase tags
TRAIN = 0
TEST = 1
MISC = 2


def stream(master_seed: int, *key: int) -> np.random.Generator:
    if master_seed < 0:
        raise ValueError("master_seed must be non-negative")
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
