"""Counter-based random number streams.

Every sampling routine takes an explicit integer seed plus a "lane" tuple.
Distinct lanes derived from the same seed give independent, reproducible
streams regardless of execution order, which is what makes path-level
parallelism and coupled simulations (same jumps, different truncations)
deterministic.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, lane: tuple[int, ...] = ()) -> np.random.Generator:
    """Return a Philox-backed generator for the given seed and lane."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(v) for v in lane))
    return np.random.Generator(np.random.Philox(ss))
