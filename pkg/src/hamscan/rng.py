"""Deterministic random-stream derivation.

A single root seed fans out into independent named streams so that the
serial and per-component orderings of draws never interfere with each
other.  Stream identity is (label, index); the label is hashed with
BLAKE2s so the mapping is stable across platforms and Python versions.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(root_seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Return the generator for the (label, index) stream under root_seed."""
    digest = hashlib.blake2s(label.encode("utf-8"), digest_size=8).digest()
    words = [
        int(root_seed) & _MASK64,
        int.from_bytes(digest, "little"),
        int(index) & _MASK64,
    ]
    return np.random.default_rng(np.random.SeedSequence(words))
