"""Deterministic RNG derivation.

Streams are keyed by strings rather than Python's salted ``hash()`` so the
same inputs give the same draws across processes and platforms.
"""

from __future__ import annotations

import hashlib
import random


def stable_seed(*parts: object) -> int:
    """Map a tuple of key parts to a 64-bit seed via sha256."""
    key = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stable_rng(*parts: object) -> random.Random:
    """A ``random.Random`` seeded from ``stable_seed(*parts)``."""
    return random.Random(stable_seed(*parts))
