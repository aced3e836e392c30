"""Deterministic RNG substream derivation.

Every stochastic task in the package (simulation, continuation noise,
bootstrap draws, Monte Carlo replications) owns its own generator, derived
from a master seed plus a purpose key.  Streams are never shared between
tasks, so results do not depend on scheduling or worker count.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream"]


def _key_to_int(part: int | str) -> int:
    if isinstance(part, str):
        # crc32 is stable across processes, unlike hash() on str
        return zlib.crc32(part.encode("utf-8"))
    value = int(part)
    if value < 0:
        raise ValueError(f"substream key parts must be nonnegative, got {part!r}")
    return value


def substream(master_seed: int, *key: int | str) -> np.random.Generator:
    """Return a generator keyed by ``(master_seed, *key)``.

    The same arguments always yield the same stream; distinct keys yield
    statistically independent streams.
    """
    entropy = (_key_to_int(master_seed),) + tuple(_key_to_int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(entropy))
