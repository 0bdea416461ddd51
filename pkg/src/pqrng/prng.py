"""Reproducible random streams.

All simulation randomness comes from numpy's Philox4x32 counter-based
generator. A run seed plus ``(channel, purpose)`` spawn keys give each
consumer its own non-overlapping stream, so channels never share state and
results do not depend on scheduling.
"""

from __future__ import annotations

import secrets

import numpy as np

GENERATOR_NAME = "philox4x32-10"

# spawn-key purposes
QUANTUM = 0
CLASSICAL = 1
TOEPLITZ_SEED = 2
TEST = 3

MAX_SEED = (1 << 64) - 1


def stream(seed: int, channel: int, purpose: int) -> np.random.Generator:
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(channel, purpose))
    return np.random.Generator(np.random.Philox(ss))


def fresh_seed() -> int:
    """Seed drawn from the platform entropy source (non-reproducible mode only)."""
    return secrets.randbits(64)


def parse_seed(text: str | int) -> int:
    """Ints pass through; strings are hexadecimal, with or without ``0x``."""
    value = text if isinstance(text, int) else int(text.strip(), 16)
    if not 0 <= value <= MAX_SEED:
        raise ValueError(f"seed {text!r} is not a 64-bit unsigned integer")
    return value
