"""Small shared helpers: seed mixing, tag hashing, float-exact grid snapping."""

from __future__ import annotations

import hashlib
import math
import operator

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 finaliser (bijective 64-bit mixing)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


def mix64(*parts: int) -> int:
    """Deterministically fold integers into one 64-bit value."""
    h = 0x243F6A8885A308D3
    for p in parts:
        h = splitmix64(h ^ (p & _MASK64))
    return h


def tag_to_int(tag) -> int:
    """Stable 64-bit id for ints, strings, and nested tuples.

    Process-independent (no builtin hash randomisation), so derived seeds are
    reproducible across runs and machines.
    """
    try:
        return operator.index(tag) & _MASK64
    except TypeError:
        pass
    if isinstance(tag, str):
        digest = hashlib.blake2s(tag.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    if isinstance(tag, (tuple, list)):
        h = 0x452821E638D01377
        for item in tag:
            h = splitmix64(h ^ tag_to_int(item))
        return h
    raise TypeError(f"unsupported tag type {type(tag)!r}")


def snapped_floor(x: float) -> int:
    """floor(x), robust to x sitting a few ulp below an exact integer."""
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.floor(x)


def snapped_ceil(x: float) -> int:
    """ceil(x), robust to x sitting a few ulp above an exact integer."""
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def g17(x: float) -> str:
    """Format a float with 17 significant digits (lossless round trip)."""
    return format(float(x), ".17g")
