"""Named, independent random streams derived from one root seed.

Each stream is a Philox (counter-based) generator keyed by the root seed and a
stable hash of the stream name, so adding a new consumer never shifts the
numbers another stream produces.
"""
import zlib

import numpy as np

STREAMS = ("net-init", "env", "noise", "replay", "eval")


def child_rng(root_seed: int, name: str, *index: int) -> np.random.Generator:
    if root_seed < 0:
        raise ValueError(f"seed must be non-negative, got {root_seed}")
    key = (zlib.crc32(name.encode("utf-8")), *(int(i) for i in index))
    seq = np.random.SeedSequence(entropy=int(root_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))
