"""Counter-based random streams.

Every random quantity in the package is drawn from a Philox stream keyed by a
tuple of non-negative integers, e.g. ``(seed, OUTCOMES)`` or
``(seed, BOOTSTRAP, item)``. Within a stream, element ``k`` of a row-major
block is always the ``k``-th draw, so results depend only on the key and the
block layout, never on scheduling.
"""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int]]

# stream domain tags
GRAPH = 1
OUTCOMES = 2
BOOTSTRAP = 3
INGEST = 4
EQUALIZE = 5
EXPERIMENT = 6
SCORES = 7


def _flatten(seed: SeedLike) -> list[int]:
    if isinstance(seed, (int, np.integer)):
        parts = [int(seed)]
    else:
        parts = [int(s) for s in seed]
    if not parts or any(s < 0 for s in parts):
        raise ValueError(f"seed must be non-negative integer(s), got {seed!r}")
    return parts


def stream(seed: SeedLike, *keys: int) -> np.random.Generator:
    """Philox generator for the key ``(seed..., keys...)``.

    A length terminator is appended because SeedSequence treats trailing zeros
    as padding, so ``(5,)`` and ``(5, 0)`` would otherwise collide.
    """
    parts = _flatten(seed) + [int(k) for k in keys]
    if any(k < 0 for k in parts):
        raise ValueError("stream keys must be non-negative")
    parts.append(len(parts))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(parts)))


def derive_seed(seed: SeedLike, *keys: int) -> tuple[int, ...]:
    """Child seed tuple; use wherever a function takes ``seed``."""
    return tuple(_flatten(seed) + [int(k) for k in keys])
