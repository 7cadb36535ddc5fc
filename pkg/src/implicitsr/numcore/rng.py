"""Seeded, splittable randomness.

Every consumer of randomness derives its own generator from the single
run seed plus a stream name, so results are independent of call order
and bitwise reproducible for a fixed seed.
"""

from __future__ import annotations

import hashlib

import numpy as np


def named_stream(seed, name):
    """Independent PCG64 generator for (seed, name)."""
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=16).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *words])
    return np.random.Generator(np.random.PCG64(ss))
