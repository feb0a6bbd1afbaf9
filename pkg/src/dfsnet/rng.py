"""Counter-based random number streams.

All randomness in the package flows from a single integer seed.  Every
consumer derives its own independent stream with :func:`stream`, keyed by a
string tag (and optional integer subkeys), so adding a new consumer never
shifts the samples drawn by existing ones.  The bit generator is Philox, a
counter-based generator: a stream is a pure function of (seed, tag, subkeys),
independent of how other streams are consumed.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag_to_key(tag: str) -> int:
    # stable across runs and platforms, unlike hash()
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, *subkeys: int) -> np.random.Generator:
    """Return the Philox stream identified by (seed, tag, subkeys)."""
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    spawn = (_tag_to_key(tag),) + tuple(int(k) for k in subkeys)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn)
    return np.random.Generator(np.random.Philox(ss))
