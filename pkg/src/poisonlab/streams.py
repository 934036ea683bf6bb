"""Deterministic named RNG streams.

Every run owns one 64-bit master seed. All randomness is drawn from
substreams addressed by string/int tags (``"init"``, ``"shuffle"``,
``"selection"``, ``"data"``, iteration numbers, ...), so that adding a
consumer to one stream never perturbs another. Reproducibility is
guaranteed within this implementation, not across implementations.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream_seed(master_seed: int, *tags) -> int:
    """Derive a stable 64-bit seed from a master seed and a tag path."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master_seed)).encode())
    for tag in tags:
        h.update(b"/")
        h.update(str(tag).encode())
    return int.from_bytes(h.digest(), "little")


def stream(master_seed: int, *tags) -> np.random.Generator:
    """Return the named substream as a numpy Generator."""
    return np.random.default_rng(substream_seed(master_seed, *tags))
