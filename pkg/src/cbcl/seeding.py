"""Deterministic seed derivation for nested randomized stages."""

from __future__ import annotations

import numpy as np


def derive_seed(*parts: int) -> int:
    """Mix integer tags into a single 64-bit seed.

    Gives every nested randomized stage (per-run plans, per-class k-means,
    fold splits) its own stream derived from one experiment seed, stable
    across platforms and sessions.
    """
    entropy = tuple(int(p) for p in parts)
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])
