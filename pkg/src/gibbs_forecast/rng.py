"""Seed derivation and random generators.

Every random stream in the package comes from a Philox generator (counter
based, identical output on every platform) keyed by a 64-bit value derived
from a user seed and a sequence of tags.  The derivation is:

    h = splitmix64(seed)
    for tag in tags:
        h = splitmix64(h ^ tag64(tag))

where integer tags are used modulo 2**64 and string tags are hashed with
64-bit FNV-1a over their UTF-8 bytes.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(x: int) -> int:
    """One step of the splitmix64 finalizer (a bijection on 64-bit ints)."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & MASK64
    return h


def _tag64(tag: int | str) -> int:
    if isinstance(tag, str):
        return fnv1a64(tag)
    return int(tag) & MASK64


def derive_seed(seed: int, *tags: int | str) -> int:
    """Mix ``seed`` with ``tags`` into a new 64-bit seed."""
    h = splitmix64(int(seed) & MASK64)
    for tag in tags:
        h = splitmix64(h ^ _tag64(tag))
    return h


def make_rng(seed: int, *tags: int | str) -> np.random.Generator:
    """Return an independent Philox stream for ``(seed, *tags)``."""
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, *tags)))
