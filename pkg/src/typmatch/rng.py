"""Counter-based random streams keyed by (master seed, tag, index).

Every consumer asks for its own stream, so the order in which streams are
created never changes what any one of them produces.
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_key(seed: int, *parts) -> int:
    """128-bit key from the master seed and any hashable-as-text parts."""
    h = hashlib.blake2b(digest_size=16)
    h.update(str(int(seed)).encode())
    for p in parts:
        h.update(b"\x1f" + str(p).encode())
    return int.from_bytes(h.digest(), "little")


def stream(seed: int, tag: str = "", index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=derive_key(seed, tag, index)))


def trial_seed(master: int, experiment: str, trial: int) -> int:
    """64-bit per-trial seed; reordering experiments never shifts it."""
    return derive_key(master, experiment, trial) & ((1 << 63) - 1)
