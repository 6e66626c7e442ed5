"""Seed derivation.

Every stochastic component draws from its own ``numpy.random.PCG64`` stream.
Stream seeds are derived from a master seed and a key path by hashing::

    seed = int.from_bytes(blake2b(repr((master, *keys)), digest_size=8), "little")

so two components never share a stream by accident, and any component's
stream can be rebuilt from the master seed plus its key path.
"""
import hashlib

import numpy as np

RNG_ALGORITHM = "numpy.PCG64"
SEED_HASH = "blake2b-64(repr((master, *keys)))"

_MASK64 = (1 << 64) - 1


def check_seed(seed):
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def derive_seed(master, *keys):
    """Derive a 64-bit seed from ``master`` and a path of str/int keys."""
    master = check_seed(master)
    payload = repr((master,) + tuple(keys)).encode("utf-8")
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(check_seed(seed)))
