"""Seedable, counter-based random streams.

All randomness goes through ``numpy.random.Generator`` backed by Philox4x64-10,
a counter-based bit generator, so a given (seed, stream name) pair yields the
same draws on every platform numpy supports.
"""

import zlib

import numpy as np

# Named substreams split off a single --seed
DATA_STREAM = "data"
INIT_STREAM = "init"
SHUFFLE_STREAM = "shuffle"
EVAL_STREAM = "eval"
AUGMENT_STREAM = "augment"


def make_rng(seed: int, stream: str | None = None, index: int | None = None) -> np.random.Generator:
    """Return a Philox generator for ``seed``, optionally keyed by a stream name and index."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    entropy = [seed]
    if stream is not None:
        entropy.append(zlib.crc32(stream.encode("utf-8")))
    if index is not None:
        entropy.append(index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
