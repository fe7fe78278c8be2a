"""Deterministic RNG stream derivation.

Every random draw in the package comes from a numpy Generator obtained via
:func:`stream`.  Streams are derived from a (master seed, purpose tag,
indices) tuple, so any part of an experiment can be re-run in isolation and
reproduce its random numbers bit-exactly, independent of execution order or
thread count.
"""

import zlib

import numpy as np


def stream(master_seed, purpose, *indices):
    """Return an independent Generator for (master_seed, purpose, *indices).

    The purpose tag is hashed with CRC-32 and mixed into a SeedSequence
    together with the master seed and any integer indices.
    """
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    tag = zlib.crc32(purpose.encode("utf-8"))
    entropy = [int(master_seed), tag] + [int(i) for i in indices]
    return np.random.default_rng(np.random.SeedSequence(entropy))
