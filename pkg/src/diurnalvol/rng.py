"""Counter-based random streams keyed by integer tuples.

Every stream is a Philox generator whose seed sequence is built from the
master seed plus a tuple of integer keys, so a stream depends only on its
keys and never on how many other streams were drawn before it.
"""
from __future__ import annotations

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return stream(*seed)
    return stream(int(seed))
