"""Deterministic seed derivation."""
import numpy as np


def derive_seed(master: int, *keys: int) -> int:
    """
    Derive an independent 32-bit seed from a master seed and integer keys.

    The same (master, keys) always gives the same seed, and different keys
    give statistically independent streams.
    """
    entropy = [int(master) & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def make_rng(master: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *keys))
