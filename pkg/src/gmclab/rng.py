"""Counter-based random streams.

Every stochastic routine in the library derives its randomness from a
64-bit seed through Philox substreams keyed by small integer tuples
(typically ``(component, replica)``).  Substreams are statistically
independent and reproducible under any parallel execution order.
"""
from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the given seed and substream key."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(master_seed: int, label: str) -> int:
    """Stable 63-bit seed for a named component (e.g. one experiment)."""
    digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
