"""Seed derivation.

Every random stream in the package comes from numpy's PCG64 seeded through a
``SeedSequence`` whose spawn key names the stream.  Streams derived this way
are independent of each other and identical on every platform.
"""

from __future__ import annotations

import numpy as np

# Named engine streams; the integer is the spawn-key component.
ROW_AGENT = 0
COL_AGENT = 1
ROW_SAMPLER = 2
COL_SAMPLER = 3


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream ``key`` under master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A 63-bit integer seed derived from ``seed`` and ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
