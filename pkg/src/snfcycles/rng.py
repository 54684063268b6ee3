"""Named random sub-streams derived from one root seed.

Every consumer asks for ``substream(seed, "label", index)``; the stream is a
pure function of those three values, so adding or reordering consumers never
shifts anyone else's draws.
"""

import zlib

import numpy as np


def _label_key(label):
    return zlib.crc32(label.encode("utf-8"))


def seed_sequence(seed, label, index=0):
    return np.random.SeedSequence(int(seed) & ((1 << 64) - 1),
                                  spawn_key=(_label_key(label), int(index)))


def substream(seed, label, index=0):
    return np.random.default_rng(seed_sequence(seed, label, index))


def child_seed(rng):
    """Draw a 63-bit integer seed from an existing generator."""
    return int(rng.integers(0, 2**63 - 1))
