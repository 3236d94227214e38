"""Named random substreams derived from one root seed."""

import zlib

import numpy as np

INIT = "init"
SHUFFLE = "shuffle"
SAMPLING = "sampling"
VERIFY = "verify"
BASELINE = "baseline"


def substream(seed: int, name: str) -> np.random.Generator:
    """
    Get an independent generator for a named purpose.

    The same (seed, name) always yields the same stream, and streams with
    different names do not overlap.
    """
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode("utf-8"))])
