"""Named random substreams derived from a single top-level seed."""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream"]

_MASK64 = (1 << 64) - 1


def _entropy(label: object) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & _MASK64
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, *labels: object) -> np.random.Generator:
    """Generator for the (seed, *labels) substream.

    Distinct label tuples give statistically independent streams, and the
    mapping is stable across runs and platforms, so every consumer (a grid
    point, a replicate, a Monte-Carlo oracle) can re-derive its own stream
    without sharing generator state.
    """
    entropy = [_entropy(seed)] + [_entropy(lab) for lab in labels]
    return np.random.default_rng(np.random.SeedSequence(entropy))
