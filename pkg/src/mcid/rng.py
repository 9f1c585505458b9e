"""Deterministic random streams.

All randomized operations in the package draw from Philox, a counter-based
generator with a fixed algorithm across platforms, so that any report is
reproducible bit-for-bit from its seed.  Sub-streams (replications, folds)
are derived through ``SeedSequence`` spawn keys rather than by consuming
draws from a parent stream.
"""

from __future__ import annotations

import numpy as np

SeedLike = "int | np.random.SeedSequence"


def make_rng(seed, stream: tuple[int, ...] = ()) -> np.random.Generator:
    """Return the Philox generator for ``seed``, optionally on a sub-stream."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
        if stream:
            ss = np.random.SeedSequence(entropy=ss.entropy, spawn_key=ss.spawn_key + stream)
    else:
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=stream)
    return np.random.Generator(np.random.Philox(ss))
