"""Counter-based random streams keyed by (seed, purpose, trial, slot).

Every stream is a Philox generator whose key is the run seed and whose
starting counter encodes the purpose tag, the antenna-pair slot and the trial
index. Draws for one (trial, slot) never depend on which other trials were
generated or in what order, so chunked or parallel runs reproduce serial runs
bit for bit. Within a stream, value ``n`` is the draw for mini-slot ``n``.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np

CHANNEL = 1
NOISE = 2
THETA = 3
PHASE = 4

_U64 = (1 << 64) - 1


def stream(seed: int, tag: int, trial: int, slot: int = 0) -> np.random.Generator:
    for name, v in (("seed", seed), ("tag", tag), ("trial", trial), ("slot", slot)):
        if int(v) != v or v < 0 or v > _U64:
            raise ValueError(f"{name} must be an integer in [0, 2**64), got {v!r}")
    # word 0 is left free for the generator's own block counter
    bitgen = np.random.Philox(key=int(seed), counter=[0, int(tag), int(slot), int(trial)])
    return np.random.Generator(bitgen)


def normals(seed: int, tag: int, trials: Iterable[int], size: int, slot: int = 0) -> np.ndarray:
    """Standard normals, one row of ``size`` per trial."""
    trials = list(trials)
    out = np.empty((len(trials), size))
    for r, t in enumerate(trials):
        out[r] = stream(seed, tag, t, slot).standard_normal(size)
    return out
