"""Keyed random streams.

Every stream is a Philox generator (counter based) seeded from a tuple of
integer keys, so ``stream(seed, run, 3)`` is independent of how many other
runs or nodes were drawn before it.
"""
from __future__ import annotations

import zlib

import numpy as np

METHOD_KEYS = {"dvhop": 1, "pso": 2, "scapso": 3, "adapscapso": 4}
DEPLOY_KEY = 0
NOISE_KEY = 9


def key_of(label: str | int) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("stream keys must be non-negative")
        return int(label)
    return METHOD_KEYS.get(label, zlib.crc32(label.encode()))


def stream(*keys: str | int) -> np.random.Generator:
    """Return a generator determined only by ``keys``."""
    seq = np.random.SeedSequence([key_of(k) for k in keys])
    return np.random.Generator(np.random.Philox(seq))


def child_key(rng: np.random.Generator) -> int:
    """Draw one 63-bit key from ``rng`` to root a family of sub-streams."""
    return int(rng.integers(0, 2**63 - 1))
