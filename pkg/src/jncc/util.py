"""Small shared helpers: deterministic seeding and binomial intervals."""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 63) - 1


def seed_sequence(*parts) -> np.random.SeedSequence:
    """SeedSequence from a mixed tuple of ints and labels.

    Non-integer parts are hashed, so independent streams can be labeled
    ("glnc", trial index, ...) and remain reproducible across runs and
    process boundaries.
    """
    entropy = []
    for p in parts:
        if isinstance(p, (int, np.integer)):
            entropy.append(int(p) & _MASK)
        else:
            digest = hashlib.sha256(repr(p).encode()).digest()
            entropy.append(int.from_bytes(digest[:8], "little") & _MASK)
    return np.random.SeedSequence(entropy)


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(*parts))


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)
