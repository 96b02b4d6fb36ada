"""Keyed deterministic randomness.

Every stochastic decision in the simulator is derived from a hash of its
identifying key, never from shared mutable RNG state. That makes results
independent of evaluation order (so parallel runs are bit-identical to
sequential ones) and lets coupled-randomness experiments reuse the exact
same draw for a node across modes and sweep points.
"""

from __future__ import annotations

import hashlib
import random

_SEP = b"\x1f"


def _digest(parts: tuple) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(_SEP)
    return h.digest()


def unit_draw(*key) -> float:
    """Uniform draw in [0, 1) fully determined by the key."""
    d = _digest(key)
    return int.from_bytes(d[:8], "big") / 2.0**64


def stream(*key) -> random.Random:
    """Independent random stream seeded from the key."""
    d = _digest(key)
    return random.Random(int.from_bytes(d[:16], "big"))


def token_hex(*key) -> str:
    """Opaque 16-hex-digit identifier derived from the key."""
    return _digest(key)[:8].hex()
