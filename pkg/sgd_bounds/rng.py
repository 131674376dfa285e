"""
RNG Module
Counter-based random streams keyed by (master_seed, path...)

Every random draw in the package comes from a Philox generator whose key is
derived from the master seed and a spawn path such as (replicate_index,) or
(cell_index, purpose). Streams are therefore independent of execution order.
"""
from typing import Tuple

import numpy as np

MASK_64b = 0xFFFFFFFFFFFFFFFF

# spawn-path tags, kept stable so CSV artifacts replay bit-for-bit
STREAM_REPLICATE = 0
STREAM_DATA = 1
STREAM_RECURSION = 2
STREAM_ORACLE_CHECK = 3
STREAM_START_POINT = 4


def _normalize_seed(master_seed: int) -> int:
    # negative seeds are folded into the unsigned 64-bit range
    return int(master_seed) & MASK_64b


def seed_sequence(master_seed: int, *path: int) -> np.random.SeedSequence:
    """
    Build the SeedSequence for a stream

    Args:
        master_seed: Campaign-wide seed (any int, folded to 64 bits)
        path: Non-negative integers naming the sub-stream

    Returns:
        SeedSequence whose spawn key is the path
    """
    key: Tuple[int, ...] = tuple(int(p) for p in path)
    if any(p < 0 for p in key):
        raise ValueError(f"stream path entries must be non-negative, got {key}")
    return np.random.SeedSequence(entropy=_normalize_seed(master_seed), spawn_key=key)


def rng_stream(master_seed: int, *path: int) -> np.random.Generator:
    """Philox-backed Generator for (master_seed, *path)"""
    return np.random.Generator(np.random.Philox(seed_sequence(master_seed, *path)))


def derive_seed(master_seed: int, *path: int) -> int:
    """A 64-bit integer seed for (master_seed, *path), used as the CSV seed column"""
    words = seed_sequence(master_seed, *path).generate_state(2, dtype=np.uint32)
    return (int(words[1]) << 32) | int(words[0])
