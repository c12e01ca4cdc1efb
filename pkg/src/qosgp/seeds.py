"""Deterministic substream seeds derived from one master seed.

Every random consumer (simulation runs, optimizer restarts, data splits)
gets its own substream identified by a stream id plus an index path, so
results never depend on evaluation order or on how many worker processes
share the load.
"""

from __future__ import annotations

import numpy as np

STREAM_SIM = 0
STREAM_OPT = 1
STREAM_SPLIT = 2


def substream_seed(master_seed: int, *path: int) -> int:
    """Derive a 64-bit seed for the substream addressed by ``path``."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
