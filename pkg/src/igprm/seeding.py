"""Stable seed derivation so every pipeline stage is reproducible."""

from __future__ import annotations


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of a UTF-8 string."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def derive_seed(*parts) -> int:
    """Deterministic 64-bit seed from any mix of labels and numbers."""
    return fnv1a64("|".join(str(p) for p in parts))
