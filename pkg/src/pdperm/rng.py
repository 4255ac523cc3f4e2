"""Seeded random streams.

Every stochastic routine takes an explicit integer seed. Sub-streams for a
stage or an item are derived by hashing ``(seed, *keys)`` so that adding or
removing items never shifts the randomness seen by the others.
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *keys) -> int:
    """Stable 64-bit sub-seed for ``(seed, *keys)``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr(int(seed)).encode())
    for k in keys:
        h.update(b"\x1f")
        h.update(repr(k).encode())
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int, *keys) -> np.random.Generator:
    """Counter-based (Philox) generator for ``(seed, *keys)``."""
    if keys:
        seed = derive_seed(seed, *keys)
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))
